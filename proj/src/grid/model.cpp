#include "gridmarg/grid/model.hpp"

#include <cmath>
#include <set>
#include <string>

#include "gridmarg/errors.hpp"

namespace gridmarg {

bool same_series(const Series& a, const Series& b) {
    return a.size() == b.size() && (a.size() == 0 || a == b);
}

const char* to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::Thermal: return "thermal";
        case GeneratorKind::VariableRenewable: return "variable_renewable";
        case GeneratorKind::HydroLike: return "hydro_like";
    }
    return "thermal";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
    if (s == "thermal") return GeneratorKind::Thermal;
    if (s == "variable_renewable") return GeneratorKind::VariableRenewable;
    if (s == "hydro_like") return GeneratorKind::HydroLike;
    throw ValidationError("unknown generator kind '" + s + "'");
}

bool operator==(const Generator& a, const Generator& b) {
    return a.id == b.id && a.zone_id == b.zone_id && a.kind == b.kind && a.existing_cap_mw == b.existing_cap_mw &&
           a.buildable == b.buildable && a.retirable == b.retirable && a.inv_cost_annual == b.inv_cost_annual &&
           a.fixed_om == b.fixed_om && a.var_om == b.var_om && a.heat_rate == b.heat_rate &&
           a.fuel_price == b.fuel_price && a.emissions_factor == b.emissions_factor &&
           same_series(a.capacity_factor_profile, b.capacity_factor_profile) &&
           a.min_stable_fraction == b.min_stable_fraction && a.startup_cost == b.startup_cost &&
           a.is_clean == b.is_clean;
}

int GridModel::zone_index(const std::string& id) const {
    for (std::size_t i = 0; i < zones.size(); ++i)
        if (zones[i].id == id) return static_cast<int>(i);
    return -1;
}

namespace {

[[noreturn]] void fail(const std::string& entity, const std::string& id, const std::string& field,
                       const std::string& msg) {
    throw ValidationError(entity + " '" + id + "' field '" + field + "': " + msg);
}

void check_length(const Series& s, int h, const std::string& entity, const std::string& id,
                  const std::string& field) {
    if (s.size() != h)
        fail(entity, id, field, "series length " + std::to_string(s.size()) + " does not match horizon " +
                                    std::to_string(h));
    for (Eigen::Index t = 0; t < s.size(); ++t)
        if (!std::isfinite(s[t])) fail(entity, id, field, "non-finite value at hour " + std::to_string(t));
}

void check_zone(const GridModel& g, const std::string& zone, const std::string& entity, const std::string& id,
                const std::string& field) {
    if (g.zone_index(zone) < 0) fail(entity, id, field, "unknown zone '" + zone + "'");
}

void check_unique(std::set<std::string>& seen, const std::string& entity, const std::string& id) {
    if (id.empty()) throw ValidationError(entity + " with empty id");
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "' (" + entity + ")");
}

}  // namespace

void validate(const GridModel& g) {
    const auto& c = g.config;
    const int h = c.horizon_hours;
    if (h <= 0) throw ValidationError("config field 'horizon_hours' must be positive");
    if (!(c.ev_penetration_multiplier > 0)) throw ValidationError("config field 'ev_penetration_multiplier' must be > 0");
    if (!(c.perturbation_fraction > 0)) throw ValidationError("config field 'perturbation_fraction' must be > 0");
    if (!(c.srme1_fraction > 0)) throw ValidationError("config field 'srme1_fraction' must be > 0");
    if (!(c.cost_multipliers.renewable_capex > 0) || !(c.cost_multipliers.gas_price > 0))
        throw ValidationError("config field 'cost_multipliers': multipliers must be > 0");
    if (c.emissions_penalty < 0) throw ValidationError("config field 'emissions_penalty' must be >= 0");
    if (!(c.convergence_threshold > 0)) throw ValidationError("config field 'convergence_threshold' must be > 0");
    if (c.max_iterations < 1) throw ValidationError("config field 'max_iterations' must be >= 1");
    if (c.nse_penalty && !(*c.nse_penalty > 0)) throw ValidationError("config field 'nse_penalty' must be > 0");
    if (c.co2_cap_tons && *c.co2_cap_tons < 0) throw ValidationError("config field 'co2_cap_tons' must be >= 0");
    if (c.fleet_size && !(*c.fleet_size > 0)) throw ValidationError("config field 'fleet_size' must be > 0");
    if (g.zones.empty()) throw ValidationError("scenario has no zones");

    std::set<std::string> ids;
    for (const auto& z : g.zones) {
        check_unique(ids, "zone", z.id);
        check_length(z.demand, h, "zone", z.id, "demand");
        if ((z.demand.array() < 0).any()) fail("zone", z.id, "demand", "negative demand");
        if (z.clean_share_min < 0 || z.clean_share_min > 1) fail("zone", z.id, "clean_share_min", "must lie in [0,1]");
    }
    ids.clear();
    for (const auto& gen : g.generators) {
        check_unique(ids, "generator", gen.id);
        check_zone(g, gen.zone_id, "generator", gen.id, "zone");
        if (gen.existing_cap_mw < 0) fail("generator", gen.id, "existing_cap_mw", "must be >= 0");
        if (gen.emissions_factor < 0) fail("generator", gen.id, "emissions_factor", "must be >= 0");
        if (gen.inv_cost_annual < 0 || gen.fixed_om < 0) fail("generator", gen.id, "inv_cost_annual", "costs must be >= 0");
        if (gen.min_stable_fraction < 0 || gen.min_stable_fraction >= 1)
            fail("generator", gen.id, "min_stable_fraction", "must lie in [0,1)");
        if (gen.startup_cost < 0) fail("generator", gen.id, "startup_cost", "must be >= 0");
        if (gen.kind == GeneratorKind::Thermal && !(gen.heat_rate > 0))
            fail("generator", gen.id, "heat_rate", "thermal generators need heat_rate > 0");
        if (gen.kind != GeneratorKind::Thermal && gen.capacity_factor_profile.size() == 0)
            fail("generator", gen.id, "capacity_factor_profile", "required for non-thermal generators");
        if (gen.capacity_factor_profile.size() > 0) {
            check_length(gen.capacity_factor_profile, h, "generator", gen.id, "capacity_factor_profile");
            if ((gen.capacity_factor_profile.array() < 0).any() || (gen.capacity_factor_profile.array() > 1).any())
                fail("generator", gen.id, "capacity_factor_profile", "values must lie in [0,1]");
        }
    }
    ids.clear();
    for (const auto& s : g.storage_units) {
        check_unique(ids, "storage", s.id);
        check_zone(g, s.zone_id, "storage", s.id, "zone");
        if (s.existing_power_mw < 0 || s.existing_energy_mwh < 0)
            fail("storage", s.id, "existing_power_mw", "capacities must be >= 0");
        if (!(s.charge_efficiency > 0 && s.charge_efficiency <= 1))
            fail("storage", s.id, "charge_efficiency", "must lie in (0,1]");
        if (!(s.discharge_efficiency > 0 && s.discharge_efficiency <= 1))
            fail("storage", s.id, "discharge_efficiency", "must lie in (0,1]");
        if (s.inv_cost_power < 0 || s.inv_cost_energy < 0) fail("storage", s.id, "inv_cost_power", "costs must be >= 0");
    }
    ids.clear();
    for (const auto& l : g.lines) {
        check_unique(ids, "line", l.id);
        check_zone(g, l.from_zone, "line", l.id, "from_zone");
        check_zone(g, l.to_zone, "line", l.id, "to_zone");
        if (l.from_zone == l.to_zone) fail("line", l.id, "to_zone", "must differ from from_zone");
        if (l.capacity_mw < 0) fail("line", l.id, "capacity_mw", "must be >= 0");
        if (l.loss_fraction < 0 || l.loss_fraction >= 1) fail("line", l.id, "loss_fraction", "must lie in [0,1)");
        if (l.expansion_cost < 0) fail("line", l.id, "expansion_cost", "must be >= 0");
    }
    ids.clear();
    for (const auto& f : g.flexible_loads) {
        check_unique(ids, "flexible_load", f.id);
        check_zone(g, f.zone_id, "flexible_load", f.id, "zone");
        check_length(f.baseline_profile, h, "flexible_load", f.id, "baseline_profile");
        if ((f.baseline_profile.array() < 0).any()) fail("flexible_load", f.id, "baseline_profile", "negative charging");
        if (f.max_advance_hours < 0) fail("flexible_load", f.id, "max_advance_hours", "must be >= 0");
        if (f.max_delay_hours < 0) fail("flexible_load", f.id, "max_delay_hours", "must be >= 0");
        if (!(f.penetration_scale > 0)) fail("flexible_load", f.id, "penetration_scale", "must be > 0");
        if (f.max_charge_rate_mw && !(*f.max_charge_rate_mw >= 0))
            fail("flexible_load", f.id, "max_charge_rate_mw", "must be >= 0");
        if (f.max_advance_hours == 0 && f.max_delay_hours == 0) {
            const Series req = requested_charging(f, c);
            if (req.size() > 0 && max_charge_rate(f, c) < req.maxCoeff() * (1 - 1e-12))
                fail("flexible_load", f.id, "max_charge_rate_mw",
                     "below the hourly baseline peak with no flexibility window");
        }
    }
}

Series requested_charging(const FlexibleLoad& load, const ScenarioConfig& config) {
    return load.baseline_profile * (load.penetration_scale * config.ev_penetration_multiplier);
}

double max_charge_rate(const FlexibleLoad& load, const ScenarioConfig& config) {
    if (load.max_charge_rate_mw) return *load.max_charge_rate_mw;
    const Series req = requested_charging(load, config);
    return req.size() == 0 ? 0.0 : 3.0 * req.maxCoeff();
}

GridModel apply_sensitivity(const GridModel& grid, const CostMultipliers& m) {
    if (!(m.renewable_capex > 0) || !(m.gas_price > 0))
        throw ValidationError("sensitivity multipliers must be > 0");
    GridModel out = grid;
    for (auto& g : out.generators) {
        if (g.kind == GeneratorKind::VariableRenewable) g.inv_cost_annual *= m.renewable_capex;
        if (g.kind == GeneratorKind::Thermal) g.fuel_price *= m.gas_price;
    }
    return out;
}

GridModel scale_ev_penetration(const GridModel& grid, double multiplier) {
    if (!(multiplier > 0)) throw ValidationError("EV penetration multiplier must be > 0");
    GridModel out = grid;
    for (auto& f : out.flexible_loads) {
        f.baseline_profile *= multiplier;
        if (f.max_charge_rate_mw) *f.max_charge_rate_mw *= multiplier;
    }
    return out;
}

double annualize(double overnight_cost, double wacc, int lifetime_years) {
    if (lifetime_years <= 0) throw ValidationError("lifetime must be positive");
    if (wacc == 0.0) return overnight_cost / lifetime_years;
    const double growth = std::pow(1.0 + wacc, lifetime_years);
    return overnight_cost * wacc * growth / (growth - 1.0);
}

}  // namespace gridmarg
