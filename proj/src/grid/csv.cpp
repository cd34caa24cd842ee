#include "gridmarg/grid/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "gridmarg/errors.hpp"

namespace gridmarg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Series read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingSeries("series file not found: " + path.string());
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty series file", 1);
    ++lineno;
    if (trim(line) != "hour,value") throw ParseError(path.string() + ": expected header 'hour,value'", lineno);
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos) throw ParseError(path.string() + ": expected 'hour,value'", lineno);
        const std::string hour_text = trim(t.substr(0, comma));
        const std::string value_text = trim(t.substr(comma + 1));
        long hour = -1;
        auto [hp, hec] = std::from_chars(hour_text.data(), hour_text.data() + hour_text.size(), hour);
        if (hec != std::errc{} || hp != hour_text.data() + hour_text.size())
            throw ParseError(path.string() + ": bad hour '" + hour_text + "'", lineno);
        if (hour != static_cast<long>(values.size()))
            throw ParseError(path.string() + ": hours must be consecutive from 0, got " + hour_text, lineno);
        double value = 0;
        auto [vp, vec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (vec != std::errc{} || vp != value_text.data() + value_text.size())
            throw ParseError(path.string() + ": bad value '" + value_text + "'", lineno);
        values.push_back(value);
    }
    return Eigen::Map<const Series>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void write_series_csv(const std::filesystem::path& path, const Series& series) {
    std::ostringstream os;
    os << "hour,value\n";
    for (Eigen::Index t = 0; t < series.size(); ++t) os << t << ',' << format_double(series[t]) << '\n';
    write_file_atomic(path, os.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace gridmarg
