#include "gridmarg/grid/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gridmarg/errors.hpp"
#include "gridmarg/grid/csv.hpp"

namespace gridmarg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Reader {
public:
    Reader(const json& obj, std::string where, const fs::path& base)
        : obj_(obj), where_(std::move(where)), base_(base) {
        if (!obj_.is_object()) throw ParseError(where_ + ": expected an object");
    }

    ~Reader() = default;

    // Rejects keys that were never read.
    void finish() const {
        for (const auto& [key, _] : obj_.items())
            if (!seen_.count(key)) throw ParseError(where_ + ": unknown field '" + key + "'");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    bool contains_key(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    std::string str(const std::string& key) {
        if (!has(key)) throw ParseError(where_ + ": missing field '" + key + "'");
        const auto& v = obj_.at(key);
        if (!v.is_string()) throw ParseError(where_ + ": field '" + key + "' must be a string");
        return v.get<std::string>();
    }

    double num(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ParseError(where_ + ": missing field '" + key + "'");
        }
        const auto& v = obj_.at(key);
        if (!v.is_number()) throw ParseError(where_ + ": field '" + key + "' must be a number");
        return v.get<double>();
    }

    std::optional<double> opt_num(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return num(key);
    }

    int integer(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer()) throw ParseError(where_ + ": field '" + key + "' must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_boolean()) throw ParseError(where_ + ": field '" + key + "' must be true or false");
        return v.get<bool>();
    }

    Series series(const std::string& key, int horizon, bool required = true) {
        if (!has(key)) {
            if (required) throw ParseError(where_ + ": missing series '" + key + "'");
            return {};
        }
        const auto& v = obj_.at(key);
        if (v.is_string()) return read_series_csv(base_ / v.get<std::string>());
        if (v.is_number()) return Series::Constant(horizon, v.get<double>());
        if (v.is_array()) {
            Series s(static_cast<Eigen::Index>(v.size()));
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number()) throw ParseError(where_ + ": series '" + key + "' has a non-numeric entry");
                s[static_cast<Eigen::Index>(i)] = v[i].get<double>();
            }
            return s;
        }
        throw ParseError(where_ + ": series '" + key + "' must be a CSV path, an array, or a number");
    }

    const json& sub(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

private:
    const json& obj_;
    std::string where_;
    fs::path base_;
    std::set<std::string> seen_;
};

const json& section(const json& doc, const char* name) {
    static const json empty = json::array();
    if (!doc.contains(name) || doc.at(name).is_null()) return empty;
    const auto& v = doc.at(name);
    if (!v.is_array()) throw ParseError(std::string("section '") + name + "' must be an array");
    return v;
}

std::string entity_where(const char* section_name, const json& item, std::size_t index) {
    if (item.is_object() && item.contains("id") && item.at("id").is_string())
        return std::string(section_name) + " '" + item.at("id").get<std::string>() + "'";
    return std::string(section_name) + "[" + std::to_string(index) + "]";
}

int line_of_byte(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

ScenarioConfig parse_config(const json& doc) {
    ScenarioConfig c;
    if (!doc.contains("config")) throw ParseError("missing section 'config'");
    Reader r(doc.at("config"), "config", {});
    c.horizon_hours = r.integer("horizon_hours", 0);
    if (!r.has("horizon_hours")) throw ParseError("config: missing field 'horizon_hours'");
    c.ev_penetration_multiplier = r.num("ev_penetration_multiplier", 1.0);
    c.perturbation_fraction = r.num("perturbation_fraction", 0.05);
    c.srme1_fraction = r.num("srme1_fraction", 0.03);
    c.emissions_penalty = r.num("emissions_penalty", 1000.0);
    c.convergence_threshold = r.num("convergence_threshold", 0.01);
    c.max_iterations = r.integer("max_iterations", 10);
    if (r.has("cost_multipliers")) {
        Reader m(r.sub("cost_multipliers"), "config.cost_multipliers", {});
        c.cost_multipliers.renewable_capex = m.num("renewable_capex", 1.0);
        c.cost_multipliers.gas_price = m.num("gas_price", 1.0);
        m.finish();
    }
    // An explicit null disables non-served energy; an absent key keeps the default.
    if (r.contains_key("nse_penalty")) c.nse_penalty = r.opt_num("nse_penalty");
    c.icev_tco2_per_year = r.num("icev_tco2_per_year", 3.0);
    c.ev_annual_mwh = r.num("ev_annual_mwh", 3.0);
    c.co2_cap_tons = r.opt_num("co2_cap_tons");
    c.fleet_size = r.opt_num("fleet_size");
    r.finish();
    return c;
}

}  // namespace

GridModel parse_scenario(const std::string& text, const fs::path& base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed scenario JSON: ") + e.what(), line_of_byte(text, e.byte));
    }
    if (!doc.is_object()) throw ParseError("scenario document must be a JSON object", 1);
    for (const auto& [key, _] : doc.items())
        if (key != "config" && key != "zones" && key != "generators" && key != "storage" && key != "lines" &&
            key != "flexible_loads")
            throw ParseError("unknown section '" + key + "'");

    GridModel g;
    g.config = parse_config(doc);
    const int h = g.config.horizon_hours;

    const auto& zones = section(doc, "zones");
    for (std::size_t i = 0; i < zones.size(); ++i) {
        Reader r(zones[i], entity_where("zone", zones[i], i), base);
        Zone z;
        z.id = r.str("id");
        z.demand = r.series("demand", h);
        z.clean_share_min = r.num("clean_share_min", 0.0);
        r.finish();
        g.zones.push_back(std::move(z));
    }
    const auto& gens = section(doc, "generators");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        Reader r(gens[i], entity_where("generator", gens[i], i), base);
        Generator x;
        x.id = r.str("id");
        x.zone_id = r.str("zone");
        x.kind = generator_kind_from_string(r.str("kind"));
        x.existing_cap_mw = r.num("existing_cap_mw", 0.0);
        x.buildable = r.boolean("buildable", false);
        x.retirable = r.boolean("retirable", false);
        x.inv_cost_annual = r.num("inv_cost_annual", 0.0);
        x.fixed_om = r.num("fixed_om", 0.0);
        x.var_om = r.num("var_om", 0.0);
        x.heat_rate = r.num("heat_rate", 0.0);
        x.fuel_price = r.num("fuel_price", 0.0);
        x.emissions_factor = r.num("emissions_factor", 0.0);
        x.capacity_factor_profile = r.series("capacity_factor_profile", h, false);
        x.min_stable_fraction = r.num("min_stable_fraction", 0.0);
        x.startup_cost = r.num("startup_cost", 0.0);
        x.is_clean = r.boolean("is_clean", false);
        r.finish();
        g.generators.push_back(std::move(x));
    }
    const auto& stor = section(doc, "storage");
    for (std::size_t i = 0; i < stor.size(); ++i) {
        Reader r(stor[i], entity_where("storage", stor[i], i), base);
        StorageUnit s;
        s.id = r.str("id");
        s.zone_id = r.str("zone");
        s.existing_power_mw = r.num("existing_power_mw", 0.0);
        s.existing_energy_mwh = r.num("existing_energy_mwh", 0.0);
        s.buildable = r.boolean("buildable", false);
        s.inv_cost_power = r.num("inv_cost_power", 0.0);
        s.inv_cost_energy = r.num("inv_cost_energy", 0.0);
        s.charge_efficiency = r.num("charge_efficiency", 1.0);
        s.discharge_efficiency = r.num("discharge_efficiency", 1.0);
        s.var_om = r.num("var_om", 0.0);
        r.finish();
        g.storage_units.push_back(std::move(s));
    }
    const auto& lines = section(doc, "lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        Reader r(lines[i], entity_where("line", lines[i], i), base);
        TransmissionLine l;
        l.id = r.str("id");
        l.from_zone = r.str("from_zone");
        l.to_zone = r.str("to_zone");
        l.capacity_mw = r.num("capacity_mw", 0.0);
        l.expandable = r.boolean("expandable", false);
        l.expansion_cost = r.num("expansion_cost", 0.0);
        l.loss_fraction = r.num("loss_fraction", 0.0);
        r.finish();
        g.lines.push_back(std::move(l));
    }
    const auto& flex = section(doc, "flexible_loads");
    for (std::size_t i = 0; i < flex.size(); ++i) {
        Reader r(flex[i], entity_where("flexible_load", flex[i], i), base);
        FlexibleLoad f;
        f.id = r.str("id");
        f.zone_id = r.str("zone");
        f.baseline_profile = r.series("baseline_profile", h);
        f.max_advance_hours = r.integer("max_advance_hours", 0);
        f.max_delay_hours = r.integer("max_delay_hours", 0);
        f.max_charge_rate_mw = r.opt_num("max_charge_rate_mw");
        f.penetration_scale = r.num("penetration_scale", 1.0);
        r.finish();
        g.flexible_loads.push_back(std::move(f));
    }
    validate(g);
    return g;
}

GridModel load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

fs::path write_scenario(const GridModel& g, const fs::path& dir) {
    fs::create_directories(dir);
    auto series_ref = [&](const std::string& name, const Series& s) {
        const std::string file = name + ".csv";
        write_series_csv(dir / file, s);
        return file;
    };
    json doc;
    const auto& c = g.config;
    json cfg = {{"horizon_hours", c.horizon_hours},
                {"ev_penetration_multiplier", c.ev_penetration_multiplier},
                {"perturbation_fraction", c.perturbation_fraction},
                {"srme1_fraction", c.srme1_fraction},
                {"emissions_penalty", c.emissions_penalty},
                {"convergence_threshold", c.convergence_threshold},
                {"max_iterations", c.max_iterations},
                {"cost_multipliers",
                 {{"renewable_capex", c.cost_multipliers.renewable_capex}, {"gas_price", c.cost_multipliers.gas_price}}},
                {"icev_tco2_per_year", c.icev_tco2_per_year},
                {"ev_annual_mwh", c.ev_annual_mwh}};
    cfg["nse_penalty"] = c.nse_penalty ? json(*c.nse_penalty) : json(nullptr);
    if (c.co2_cap_tons) cfg["co2_cap_tons"] = *c.co2_cap_tons;
    if (c.fleet_size) cfg["fleet_size"] = *c.fleet_size;
    doc["config"] = cfg;

    doc["zones"] = json::array();
    for (const auto& z : g.zones)
        doc["zones"].push_back(
            {{"id", z.id}, {"demand", series_ref("zone_" + z.id + "_demand", z.demand)}, {"clean_share_min", z.clean_share_min}});
    doc["generators"] = json::array();
    for (const auto& x : g.generators) {
        json j = {{"id", x.id},
                  {"zone", x.zone_id},
                  {"kind", to_string(x.kind)},
                  {"existing_cap_mw", x.existing_cap_mw},
                  {"buildable", x.buildable},
                  {"retirable", x.retirable},
                  {"inv_cost_annual", x.inv_cost_annual},
                  {"fixed_om", x.fixed_om},
                  {"var_om", x.var_om},
                  {"heat_rate", x.heat_rate},
                  {"fuel_price", x.fuel_price},
                  {"emissions_factor", x.emissions_factor},
                  {"min_stable_fraction", x.min_stable_fraction},
                  {"startup_cost", x.startup_cost},
                  {"is_clean", x.is_clean}};
        if (x.capacity_factor_profile.size() > 0)
            j["capacity_factor_profile"] = series_ref("gen_" + x.id + "_cf", x.capacity_factor_profile);
        doc["generators"].push_back(j);
    }
    doc["storage"] = json::array();
    for (const auto& s : g.storage_units)
        doc["storage"].push_back({{"id", s.id},
                                  {"zone", s.zone_id},
                                  {"existing_power_mw", s.existing_power_mw},
                                  {"existing_energy_mwh", s.existing_energy_mwh},
                                  {"buildable", s.buildable},
                                  {"inv_cost_power", s.inv_cost_power},
                                  {"inv_cost_energy", s.inv_cost_energy},
                                  {"charge_efficiency", s.charge_efficiency},
                                  {"discharge_efficiency", s.discharge_efficiency},
                                  {"var_om", s.var_om}});
    doc["lines"] = json::array();
    for (const auto& l : g.lines)
        doc["lines"].push_back({{"id", l.id},
                                {"from_zone", l.from_zone},
                                {"to_zone", l.to_zone},
                                {"capacity_mw", l.capacity_mw},
                                {"expandable", l.expandable},
                                {"expansion_cost", l.expansion_cost},
                                {"loss_fraction", l.loss_fraction}});
    doc["flexible_loads"] = json::array();
    for (const auto& f : g.flexible_loads) {
        json j = {{"id", f.id},
                  {"zone", f.zone_id},
                  {"baseline_profile", series_ref("flex_" + f.id + "_baseline", f.baseline_profile)},
                  {"max_advance_hours", f.max_advance_hours},
                  {"max_delay_hours", f.max_delay_hours},
                  {"penetration_scale", f.penetration_scale}};
        if (f.max_charge_rate_mw) j["max_charge_rate_mw"] = *f.max_charge_rate_mw;
        doc["flexible_loads"].push_back(j);
    }
    const fs::path out = dir / "scenario.json";
    write_file_atomic(out, doc.dump(2) + "\n");
    return out;
}

}  // namespace gridmarg
