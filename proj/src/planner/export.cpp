#include "gridmarg/planner/export.hpp"

#include <map>
#include <sstream>

#include "json.hpp"

#include "gridmarg/grid/csv.hpp"

namespace gridmarg {

namespace fs = std::filesystem;

std::string dispatch_summary_json(const GridModel& g, const DispatchResult& r) {
    nlohmann::ordered_json doc;
    doc["mode"] = to_string(r.mode);
    doc["total_cost"] = r.total_cost;
    doc["investment_cost"] = r.investment_cost;
    doc["operational_cost"] = r.operational_cost;
    doc["total_emissions_tco2"] = r.total_emissions();
    doc["total_served_mwh"] = r.total_served();
    doc["non_served_mwh"] = r.non_served.sum();

    std::map<std::string, std::pair<double, double>> by_kind;  // generation, emissions
    nlohmann::ordered_json units = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
        const auto& gen = g.generators[i];
        const double mwh = r.generation.row(static_cast<Index>(i)).sum();
        const double tco2 = mwh * gen.emissions_factor;
        auto& k = by_kind[to_string(gen.kind)];
        k.first += mwh;
        k.second += tco2;
        units[gen.id] = {{"kind", to_string(gen.kind)},
                         {"generation_mwh", mwh},
                         {"emissions_tco2", tco2},
                         {"curtailment_mwh", r.curtailment.row(static_cast<Index>(i)).sum()}};
    }
    nlohmann::ordered_json kinds = nlohmann::ordered_json::object();
    for (const auto& [kind, v] : by_kind) kinds[kind] = {{"generation_mwh", v.first}, {"emissions_tco2", v.second}};
    doc["totals_by_kind"] = kinds;
    doc["totals_by_unit"] = units;
    return doc.dump(2) + "\n";
}

std::vector<std::string> write_dispatch_result(const GridModel& g, const DispatchResult& r, const fs::path& dir) {
    const int h = g.horizon();
    std::ostringstream dispatch, capacity, emissions, prices;

    dispatch << "hour,zone,unit,generation_mw\n";
    for (int t = 0; t < h; ++t)
        for (std::size_t i = 0; i < g.generators.size(); ++i)
            dispatch << t << ',' << g.generators[i].zone_id << ',' << g.generators[i].id << ','
                     << format_double(r.generation(static_cast<Index>(i), t)) << '\n';

    capacity << "unit,existing_mw,new_mw,retired_mw\n";
    for (std::size_t i = 0; i < g.generators.size(); ++i)
        capacity << g.generators[i].id << ',' << format_double(g.generators[i].existing_cap_mw) << ','
                 << format_double(r.capacity.generator_new[static_cast<Index>(i)]) << ','
                 << format_double(r.capacity.generator_retired[static_cast<Index>(i)]) << '\n';
    for (std::size_t k = 0; k < g.storage_units.size(); ++k) {
        const auto& s = g.storage_units[k];
        capacity << s.id << ',' << format_double(s.existing_power_mw) << ','
                 << format_double(r.capacity.storage_power_new[static_cast<Index>(k)]) << ",0\n";
        capacity << s.id << "/energy," << format_double(s.existing_energy_mwh) << ','
                 << format_double(r.capacity.storage_energy_new[static_cast<Index>(k)]) << ",0\n";
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l)
        capacity << g.lines[l].id << ',' << format_double(g.lines[l].capacity_mw) << ','
                 << format_double(r.capacity.line_new[static_cast<Index>(l)]) << ",0\n";

    emissions << "hour,zone,tco2\n";
    prices << "hour,zone,usd_per_mwh\n";
    for (int t = 0; t < h; ++t)
        for (std::size_t z = 0; z < g.zones.size(); ++z) {
            emissions << t << ',' << g.zones[z].id << ',' << format_double(r.emissions(static_cast<Index>(z), t)) << '\n';
            prices << t << ',' << g.zones[z].id << ',' << format_double(r.price(static_cast<Index>(z), t)) << '\n';
        }

    write_file_atomic(dir / "dispatch.csv", dispatch.str());
    write_file_atomic(dir / "capacity.csv", capacity.str());
    write_file_atomic(dir / "emissions.csv", emissions.str());
    write_file_atomic(dir / "prices.csv", prices.str());
    write_file_atomic(dir / "summary.json", dispatch_summary_json(g, r));
    return {"dispatch.csv", "capacity.csv", "emissions.csv", "prices.csv", "summary.json"};
}

}  // namespace gridmarg
