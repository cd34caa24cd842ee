#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace gridmarg {

/// Hourly series (MW, MWh, or a fraction, depending on the field).
using Series = Eigen::VectorXd;

bool same_series(const Series& a, const Series& b);

enum class GeneratorKind { Thermal, VariableRenewable, HydroLike };

const char* to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

struct Zone {
    std::string id;
    Series demand;  // MW
    double clean_share_min = 0.0;

    friend bool operator==(const Zone& a, const Zone& b) {
        return a.id == b.id && same_series(a.demand, b.demand) && a.clean_share_min == b.clean_share_min;
    }
};

struct Generator {
    std::string id;
    std::string zone_id;
    GeneratorKind kind = GeneratorKind::Thermal;
    double existing_cap_mw = 0.0;
    bool buildable = false;
    bool retirable = false;
    double inv_cost_annual = 0.0;  // $/MW-yr
    double fixed_om = 0.0;         // $/MW-yr
    double var_om = 0.0;           // $/MWh, negative for a production credit
    double heat_rate = 0.0;        // MMBtu/MWh
    double fuel_price = 0.0;       // $/MMBtu
    double emissions_factor = 0.0; // tCO2/MWh
    Series capacity_factor_profile;  // empty means 1.0 every hour
    double min_stable_fraction = 0.0;
    double startup_cost = 0.0;  // $/MW started
    bool is_clean = false;

    /// Fuel plus variable O&M, $/MWh.
    double marginal_cost() const { return var_om + heat_rate * fuel_price; }
    double availability(Eigen::Index hour) const {
        return capacity_factor_profile.size() == 0 ? 1.0 : capacity_factor_profile[hour];
    }
    bool has_commitment() const {
        return kind == GeneratorKind::Thermal && (min_stable_fraction > 0.0 || startup_cost > 0.0);
    }

    friend bool operator==(const Generator& a, const Generator& b);
};

struct StorageUnit {
    std::string id;
    std::string zone_id;
    double existing_power_mw = 0.0;
    double existing_energy_mwh = 0.0;
    bool buildable = false;
    double inv_cost_power = 0.0;   // $/MW-yr
    double inv_cost_energy = 0.0;  // $/MWh-yr
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;
    double var_om = 0.0;  // $/MWh discharged

    friend bool operator==(const StorageUnit&, const StorageUnit&) = default;
};

struct TransmissionLine {
    std::string id;
    std::string from_zone;
    std::string to_zone;
    double capacity_mw = 0.0;
    bool expandable = false;
    double expansion_cost = 0.0;  // $/MW-yr
    double loss_fraction = 0.0;

    friend bool operator==(const TransmissionLine&, const TransmissionLine&) = default;
};

struct FlexibleLoad {
    std::string id;
    std::string zone_id;
    Series baseline_profile;  // MW requested per hour
    int max_advance_hours = 0;
    int max_delay_hours = 0;
    std::optional<double> max_charge_rate_mw;  // defaults to 3x the effective baseline peak
    double penetration_scale = 1.0;

    friend bool operator==(const FlexibleLoad& a, const FlexibleLoad& b) {
        return a.id == b.id && a.zone_id == b.zone_id && same_series(a.baseline_profile, b.baseline_profile) &&
               a.max_advance_hours == b.max_advance_hours && a.max_delay_hours == b.max_delay_hours &&
               a.max_charge_rate_mw == b.max_charge_rate_mw && a.penetration_scale == b.penetration_scale;
    }
};

struct CostMultipliers {
    double renewable_capex = 1.0;
    double gas_price = 1.0;

    friend bool operator==(const CostMultipliers&, const CostMultipliers&) = default;
};

struct ScenarioConfig {
    int horizon_hours = 24;
    double ev_penetration_multiplier = 1.0;
    double perturbation_fraction = 0.05;
    double srme1_fraction = 0.03;
    double emissions_penalty = 1000.0;  // $/tCO2
    double convergence_threshold = 0.01;
    int max_iterations = 10;
    CostMultipliers cost_multipliers;
    std::optional<double> nse_penalty = 9000.0;  // empty disables non-served energy
    double icev_tco2_per_year = 3.0;
    double ev_annual_mwh = 3.0;
    std::optional<double> co2_cap_tons;
    std::optional<double> fleet_size;  // vehicles represented by the flexible loads at multiplier 1

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct GridModel {
    std::vector<Zone> zones;
    std::vector<Generator> generators;
    std::vector<StorageUnit> storage_units;
    std::vector<TransmissionLine> lines;
    std::vector<FlexibleLoad> flexible_loads;
    ScenarioConfig config;

    int horizon() const { return config.horizon_hours; }
    /// Position of a zone id in `zones`, or -1.
    int zone_index(const std::string& id) const;

    friend bool operator==(const GridModel&, const GridModel&) = default;
};

/// Throws ValidationError naming the offending entity and field.
void validate(const GridModel& grid);

/// Requested charging after penetration_scale and the scenario EV multiplier.
Series requested_charging(const FlexibleLoad& load, const ScenarioConfig& config);
/// Per-hour cap on served charging.
double max_charge_rate(const FlexibleLoad& load, const ScenarioConfig& config);

/// Scales renewable investment cost and thermal fuel price; everything else is copied unchanged.
GridModel apply_sensitivity(const GridModel& grid, const CostMultipliers& multipliers);

/// Scales every flexible-load baseline profile.
GridModel scale_ev_penetration(const GridModel& grid, double multiplier);

/// Capital recovery factor annualization of an overnight cost.
double annualize(double overnight_cost, double wacc, int lifetime_years);

}  // namespace gridmarg
