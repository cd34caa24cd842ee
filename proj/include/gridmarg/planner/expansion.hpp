#pragma once

#include <Eigen/Core>

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gridmarg/errors.hpp"
#include "gridmarg/flex/window.hpp"
#include "gridmarg/grid/model.hpp"
#include "gridmarg/lp/problem.hpp"

namespace gridmarg {

using lp::Index;

enum class PlanningMode { CapacityExpansion, OperationalFixed };

const char* to_string(PlanningMode mode);

/// Raised when a model solve does not end Optimal.
class SolveFailed : public Error {
public:
    SolveFailed(lp::Status status, PlanningMode mode, const std::string& context = {});
    lp::Status status() const noexcept { return status_; }
    PlanningMode mode() const noexcept { return mode_; }

private:
    lp::Status status_;
    PlanningMode mode_;
};

/// Investment and retirement decisions, one entry per entity in GridModel order.
struct CapacityDecisions {
    Eigen::VectorXd generator_new;
    Eigen::VectorXd generator_retired;
    Eigen::VectorXd storage_power_new;
    Eigen::VectorXd storage_energy_new;
    Eigen::VectorXd line_new;

    static CapacityDecisions none(const GridModel& grid);
};

/// Where each grid quantity lives in the LP. Entries are -1 when absent.
struct ModelIndex {
    using Grid = std::vector<std::vector<Index>>;  // [entity][hour]

    Grid generation, commitment, startup;
    std::vector<Index> generator_new, generator_retired;
    Grid charge, discharge, soc;
    std::vector<Index> storage_power_new, storage_energy_new;
    Grid flow_forward, flow_reverse;
    std::vector<Index> line_new;
    Grid flex_served;
    Grid non_served;  // [zone][hour], empty when NSE is disabled

    Grid balance_row;                  // equality rows, [zone][hour]
    std::vector<Index> clean_share_row;  // inequality rows, per zone
    Index co2_cap_row = -1;            // inequality row

    std::vector<int> variable_hour;  // hour of each variable, -1 for capacity variables
};

struct ExpansionModel {
    lp::LpProblem problem;
    ModelIndex index;
    PlanningMode mode = PlanningMode::CapacityExpansion;
    GridModel grid;  // grid the model was built from, with effective flexible requests
    std::vector<FlexConstraintSet> flex;
    CapacityDecisions fixed;      // pinned values in OperationalFixed mode
    Eigen::VectorXd emissions;    // tCO2 per unit of each variable
    double cost_constant = 0.0;   // fixed O&M on existing capacity (expansion mode)
};

struct DispatchResult {
    PlanningMode mode = PlanningMode::CapacityExpansion;
    double total_cost = 0.0;
    double operational_cost = 0.0;
    double investment_cost = 0.0;
    CapacityDecisions capacity;

    Eigen::MatrixXd generation;     // generator x hour, MW
    Eigen::MatrixXd curtailment;    // generator x hour, MW
    Eigen::MatrixXd emissions;      // zone x hour, tCO2
    Eigen::MatrixXd served_demand;  // zone x hour, MWh
    Eigen::MatrixXd price;          // zone x hour, $/MWh
    Eigen::MatrixXd non_served;     // zone x hour, MW
    Eigen::MatrixXd charge, discharge, soc;  // storage x hour
    Eigen::MatrixXd flow;                    // line x hour, net from->to MW
    Eigen::MatrixXd flex_served;             // flexible load x hour, MW
    std::vector<bool> degenerate_hours;      // some basic variable of that hour sits on a bound

    lp::LpSolution solution;

    double total_emissions() const { return emissions.sum(); }
    double total_served() const { return served_demand.sum(); }
};

ExpansionModel build_expansion_lp(const GridModel& grid);

/// Same constraint structure with investment and retirement pinned to `fixed`.
/// Throws MissingCapacity when `fixed` does not cover every entity.
ExpansionModel build_operational_lp(const GridModel& grid, const CapacityDecisions& fixed);

/// Solves and decodes. Throws SolveFailed when the LP is not Optimal.
DispatchResult solve_model(const ExpansionModel& model);

/// Decodes an optimal solution of `model.problem` (which may carry extra rows appended after build).
DispatchResult decode(const ExpansionModel& model, const lp::LpSolution& solution);

/// Objective vector of `model` restricted to cost terms, and emissions E(x).
double lp_cost(const ExpansionModel& model, const Eigen::VectorXd& x);
double lp_emissions(const ExpansionModel& model, const Eigen::VectorXd& x);

struct ScaleEV {
    double fraction;
};
struct UniformAll {
    double fraction;
};
struct SingleHour {
    std::string zone;
    int hour;
    double mw;
};
using Perturbation = std::variant<ScaleEV, UniformAll, SingleHour>;

/// Returns a copy of `grid` with demand perturbed in `target_zones` (empty = all zones).
/// SingleHour ignores `target_zones` and uses its own zone.
GridModel perturb_demand(const GridModel& grid, const std::set<std::string>& target_zones,
                         const Perturbation& perturbation);

}  // namespace gridmarg
