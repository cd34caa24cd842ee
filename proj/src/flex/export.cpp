#include "gridmarg/flex/export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "gridmarg/grid/csv.hpp"

namespace gridmarg {

namespace fs = std::filesystem;

std::string schedule_csv(const ChargingSchedule& s) {
    std::ostringstream out;
    out << "hour,zone,load,source,served_mw\n";
    for (Index t = 0; t < s.served.cols(); ++t)
        for (std::size_t f = 0; f < s.load_ids.size(); ++f)
            out << t << ',' << s.zone_ids[f] << ',' << s.load_ids[f] << ',' << to_string(s.source) << ','
                << format_double(s.served(static_cast<Index>(f), t)) << '\n';
    return out.str();
}

void write_schedule_csv(const ChargingSchedule& schedule, const fs::path& path) {
    write_file_atomic(path, schedule_csv(schedule));
}

ChargingSchedule read_schedule_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingSeries("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line != "hour,zone,load,source,served_mw") throw ParseError("'" + path.string() + "': unexpected header", 1);
    ChargingSchedule s;
    std::map<std::pair<std::string, int>, double> cells;
    int max_hour = -1, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw ParseError("'" + path.string() + "': expected 5 fields", line_no);
        int hour = 0;
        double mw = 0.0;
        const auto h = std::from_chars(f[0].data(), f[0].data() + f[0].size(), hour);
        const auto v = std::from_chars(f[4].data(), f[4].data() + f[4].size(), mw);
        if (h.ec != std::errc() || v.ec != std::errc() || v.ptr != f[4].data() + f[4].size() || hour < 0)
            throw ParseError("'" + path.string() + "': bad number", line_no);
        s.source = schedule_source_from_string(f[3]);
        if (std::find(s.load_ids.begin(), s.load_ids.end(), f[2]) == s.load_ids.end()) {
            s.load_ids.push_back(f[2]);
            s.zone_ids.push_back(f[1]);
        }
        if (!cells.emplace(std::pair{f[2], hour}, mw).second)
            throw ParseError("'" + path.string() + "': duplicate row for '" + f[2] + "'", line_no);
        max_hour = std::max(max_hour, hour);
    }
    s.served = Eigen::MatrixXd::Zero(static_cast<Index>(s.load_ids.size()), max_hour + 1);
    if (cells.size() != static_cast<std::size_t>(s.served.size()))
        throw ParseError("'" + path.string() + "': missing load/hour rows", line_no);
    for (const auto& [key, mw] : cells) {
        const auto row = std::find(s.load_ids.begin(), s.load_ids.end(), key.first) - s.load_ids.begin();
        s.served(row, key.second) = mw;
    }
    return s;
}

std::string iteration_trace_csv(const IterationTrace& trace) {
    std::ostringstream out;
    out << "iteration,consequential_tco2,rel_change,schedule_delta_norm,proxy_before,proxy_after\n";
    for (const auto& r : trace.records)
        out << r.iteration << ',' << format_double(r.consequential_tco2) << ','
            << (std::isnan(r.rel_change) ? std::string() : format_double(r.rel_change)) << ','
            << format_double(r.schedule_delta_norm) << ',' << format_double(r.proxy_before) << ','
            << format_double(r.proxy_after) << '\n';
    return out.str();
}

void write_iteration_trace_csv(const IterationTrace& trace, const fs::path& path) {
    write_file_atomic(path, iteration_trace_csv(trace));
}

}  // namespace gridmarg
