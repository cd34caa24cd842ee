#include "gridmarg/metrics/export.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "gridmarg/grid/csv.hpp"

namespace gridmarg {

namespace fs = std::filesystem;

std::string rates_csv(const EmissionRateSeries& r) {
    std::ostringstream out;
    out << "hour,zone,method,rate_tco2_per_mwh,rate_total_load_basis,degenerate\n";
    const bool alt = r.rates_total_load_basis.size() == r.rates.size() && r.rates.size() > 0;
    for (Index t = 0; t < r.rates.cols(); ++t)
        for (std::size_t z = 0; z < r.zone_ids.size(); ++z) {
            const Index zi = static_cast<Index>(z);
            const bool degenerate = static_cast<std::size_t>(t) < r.degenerate_hours.size() &&
                                    r.degenerate_hours[static_cast<std::size_t>(t)];
            out << t << ',' << r.zone_ids[z] << ',' << to_string(r.method) << ',' << format_double(r.rates(zi, t))
                << ',' << (alt ? format_double(r.rates_total_load_basis(zi, t)) : std::string()) << ','
                << (degenerate ? 1 : 0) << '\n';
        }
    return out.str();
}

void write_rates_csv(const EmissionRateSeries& rates, const fs::path& path) {
    write_file_atomic(path, rates_csv(rates));
}

EmissionRateSeries read_rates_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingSeries("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("hour,zone,method,rate_tco2_per_mwh", 0) != 0)
        throw ParseError("'" + path.string() + "': unexpected header", 1);

    struct Cell {
        double rate = 0.0;
        std::optional<double> alt;
        bool degenerate = false;
    };
    std::map<std::pair<int, std::string>, Cell> cells;
    EmissionRateSeries r;
    int max_hour = -1;
    int line_no = 1;
    auto number = [&](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ParseError("'" + path.string() + "': bad number '" + s + "'", line_no);
        return v;
    };
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 6) throw ParseError("'" + path.string() + "': expected 6 fields", line_no);
        const int hour = static_cast<int>(number(f[0]));
        const SrmeMethod method = srme_method_from_string(f[2]);
        if (first) r.method = method;
        else if (method != r.method) throw ParseError("'" + path.string() + "': mixed methods", line_no);
        first = false;
        if (std::find(r.zone_ids.begin(), r.zone_ids.end(), f[1]) == r.zone_ids.end()) r.zone_ids.push_back(f[1]);
        Cell c;
        c.rate = number(f[3]);
        if (!f[4].empty()) c.alt = number(f[4]);
        c.degenerate = f[5] == "1";
        cells[{hour, f[1]}] = c;
        max_hour = std::max(max_hour, hour);
    }
    const Index h = max_hour + 1;
    r.rates = Eigen::MatrixXd::Zero(static_cast<Index>(r.zone_ids.size()), h);
    r.degenerate_hours.assign(static_cast<std::size_t>(h), false);
    bool any_alt = false;
    Eigen::MatrixXd alt = r.rates;
    for (const auto& [key, c] : cells) {
        const Index z = r.zone_row(key.second);
        r.rates(z, key.first) = c.rate;
        if (c.alt) {
            any_alt = true;
            alt(z, key.first) = *c.alt;
        }
        if (c.degenerate) r.degenerate_hours[static_cast<std::size_t>(key.first)] = true;
    }
    if (cells.size() != static_cast<std::size_t>(r.rates.size()))
        throw ParseError("'" + path.string() + "': missing zone/hour rows", line_no);
    if (any_alt) r.rates_total_load_basis = alt;
    return r;
}

std::string consequential_json(const ConsequentialReport& r) {
    nlohmann::ordered_json doc;
    doc["base_total_emissions"] = r.base_total_emissions;
    doc["pert_total_emissions"] = r.pert_total_emissions;
    doc["consequential_emissions"] = r.consequential_emissions();
    doc["base_total_cost"] = r.base_total_cost;
    doc["pert_total_cost"] = r.pert_total_cost;
    doc["delta_demand_mwh"] = r.delta_demand_mwh;
    doc["lr_mer"] = r.lr_mer;
    doc["sr_attributed"] = r.sr_attributed ? nlohmann::ordered_json(*r.sr_attributed) : nullptr;
    doc["sr_rate"] = r.sr_attributed ? nlohmann::ordered_json(*r.sr_attributed / r.delta_demand_mwh) : nullptr;
    doc["aer_attributed"] = r.aer_attributed ? nlohmann::ordered_json(*r.aer_attributed) : nullptr;
    nlohmann::ordered_json deltas = nlohmann::ordered_json::array();
    for (const auto& d : r.capacity_deltas)
        deltas.push_back({{"technology", d.technology}, {"new_mw", d.new_mw}, {"retired_mw", d.retired_mw}});
    doc["capacity_deltas"] = deltas;
    nlohmann::ordered_json generation = nlohmann::ordered_json::array();
    for (const auto& [tech, mwh] : r.generation_deltas) generation.push_back({{"technology", tech}, {"delta_mwh", mwh}});
    doc["generation_deltas"] = generation;
    if (r.per_ev) {
        doc["per_ev_normalization"] = {{"added_vehicles", r.per_ev->added_vehicles},
                                       {"tco2_per_1000_ev", r.per_ev->tco2_per_1000_ev},
                                       {"ev_tco2_per_vehicle", r.per_ev->icev.ev_tco2_per_vehicle},
                                       {"pct_reduction_vs_icev", r.per_ev->icev.pct_reduction}};
    } else {
        doc["per_ev_normalization"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

void write_consequential_json(const ConsequentialReport& report, const fs::path& path) {
    write_file_atomic(path, consequential_json(report));
}

}  // namespace gridmarg
