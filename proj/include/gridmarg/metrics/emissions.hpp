#pragma once

#include <Eigen/Core>

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridmarg/errors.hpp"
#include "gridmarg/planner/expansion.hpp"

namespace gridmarg {

enum class SrmeMethod { Uniform, Dual };  // SRME1, SRME2

const char* to_string(SrmeMethod method);  // "srme1" / "srme2"
SrmeMethod srme_method_from_string(const std::string& s);

/// Step details of the dual-based rate computation.
struct DualStepInfo {
    double base_cost = 0.0;     // optimal operating cost of step 1
    double cost_cap = 0.0;      // base_cost plus the numerical slack
    double step2_cost = 0.0;    // operating cost of the emissions-minimizing solution
    double step2_emissions = 0.0;
    double lambda = 0.0;        // dual of the cost cap row, >= 0
};

struct EmissionRateSeries {
    SrmeMethod method = SrmeMethod::Dual;
    std::vector<std::string> zone_ids;
    Eigen::MatrixXd rates;  // zone x hour, tCO2/MWh
    // Uniform method only: the same deltas divided by the perturbed share of
    // the zone's total load over the horizon rather than its hourly load.
    Eigen::MatrixXd rates_total_load_basis;
    std::vector<bool> degenerate_hours;  // base basis has a basic variable at a bound in that hour
    std::string base_id;
    std::string comparison_id;
    std::optional<DualStepInfo> dual;

    Index zone_row(const std::string& zone) const;
};

struct CapacityDelta {
    std::string technology;
    double new_mw = 0.0;      // perturbed minus base
    double retired_mw = 0.0;  // perturbed minus base

    friend bool operator==(const CapacityDelta&, const CapacityDelta&) = default;
};

struct IcevComparison {
    double ev_tco2_per_vehicle = 0.0;
    double pct_reduction = 0.0;  // fraction, 0.83 = 83 %
};

struct PerEvNormalization {
    double added_vehicles = 0.0;
    double tco2_per_1000_ev = 0.0;  // consequential emissions over the horizon
    IcevComparison icev;
};

struct ConsequentialReport {
    double base_total_emissions = 0.0;
    double pert_total_emissions = 0.0;
    double base_total_cost = 0.0;
    double pert_total_cost = 0.0;
    double delta_demand_mwh = 0.0;
    double lr_mer = 0.0;
    std::optional<double> sr_attributed;   // tCO2
    std::optional<double> aer_attributed;  // tCO2
    std::vector<CapacityDelta> capacity_deltas;
    std::vector<std::pair<std::string, double>> generation_deltas;  // MWh by generator kind
    std::optional<PerEvNormalization> per_ev;
    Eigen::MatrixXd delta_load;  // zone x hour consumption change, MWh

    double consequential_emissions() const { return pert_total_emissions - base_total_emissions; }
};

/// Emissions over served consumption. `zone` empty means the whole system.
/// Throws ZeroDemand when nothing is served in scope.
double average_emission_rate(const GridModel& grid, const DispatchResult& result, const std::string& zone = {});

/// Perturbs the fixed load of each zone in `zones` (empty = every zone) by
/// `srme1_fraction` in every hour and divides the system-wide hourly emission
/// change by the hourly load added. One operational re-solve per zone.
EmissionRateSeries srme_uniform(const GridModel& grid, const CapacityDecisions& fixed,
                                const std::vector<std::string>& zones = {});

/// Emission rates for every zone and hour from two solves: cost minimization,
/// then emissions minimization under a cap on cost.
EmissionRateSeries srme_dual(const GridModel& grid, const CapacityDecisions& fixed);

/// Consumption change (zone x hour, grid zone order) attributed at hourly
/// rates: the sum of rate x delta over every zone and hour.
double attribute(const GridModel& grid, const EmissionRateSeries& rates, const Eigen::MatrixXd& delta_load);

struct LongRunOptions {
    std::set<std::string> target_zones;  // empty = all zones
    // Rates used for the short-run attribution; computed on the base
    // expansion plan with srme_dual when absent and `attribute_short_run`.
    std::optional<EmissionRateSeries> short_run;
    bool attribute_short_run = true;
};

/// Capacity expansion at base and ScaleEV-perturbed demand, differenced.
/// Throws DegenerateDelta when the consumption change is below 1 MWh.
ConsequentialReport long_run_mer(const GridModel& grid, const ScaleEV& perturbation,
                                 const LongRunOptions& options = {});

/// Differences two solved plans of the same grid shape.
ConsequentialReport compare_plans(const GridModel& base_grid, const DispatchResult& base,
                                  const GridModel& pert_grid, const DispatchResult& pert);

IcevComparison icev_comparison(double lr_mer, double n_vehicles, double ev_annual_mwh, double icev_tco2);
IcevComparison icev_comparison(const ConsequentialReport& report, double n_vehicles, double ev_annual_mwh,
                               double icev_tco2);

}  // namespace gridmarg
