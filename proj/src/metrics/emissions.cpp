#include "gridmarg/metrics/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gridmarg/lp/simplex.hpp"

namespace gridmarg {

namespace {

// Relative slack on the step-two cost cap; keeps the cap row from being
// infeasible by rounding when the step-one optimum is reproduced exactly.
constexpr double kCostCapSlack = 1e-7;

DispatchResult solve_or_throw(const ExpansionModel& model, const std::string& context) {
    const auto s = lp::solve(model.problem);
    if (s.status != lp::Status::Optimal) throw SolveFailed(s.status, model.mode, context);
    return decode(model, s);
}

// Appends `row . x <= rhs` to a copy of `problem`.
lp::LpProblem with_le_row(const lp::LpProblem& problem, const Eigen::VectorXd& row, double rhs) {
    lp::LpProblem out = problem;
    const Index m = problem.ineq_matrix.rows();
    const Index n = problem.num_variables();
    std::vector<Eigen::Triplet<double>> triplets;
    for (Index i = 0; i < m; ++i)
        for (lp::LpProblem::SparseMatrix::InnerIterator it(problem.ineq_matrix, i); it; ++it)
            triplets.emplace_back(i, it.col(), it.value());
    for (Index j = 0; j < n; ++j)
        if (row[j] != 0.0) triplets.emplace_back(m, j, row[j]);
    out.ineq_matrix.resize(m + 1, n);
    out.ineq_matrix.setFromTriplets(triplets.begin(), triplets.end());
    out.ineq_rhs.conservativeResize(m + 1);
    out.ineq_rhs[m] = rhs;
    return out;
}

double balance_dual(const lp::LpSolution& s, const ModelIndex& ix, std::size_t z, int t) {
    return s.eq_duals[ix.balance_row[z][static_cast<std::size_t>(t)]];
}

// Consumption actually requested in each zone and hour: served plus unserved.
Eigen::MatrixXd consumption(const DispatchResult& r) { return r.served_demand + r.non_served; }

}  // namespace

const char* to_string(SrmeMethod method) { return method == SrmeMethod::Uniform ? "srme1" : "srme2"; }

SrmeMethod srme_method_from_string(const std::string& s) {
    if (s == "srme1") return SrmeMethod::Uniform;
    if (s == "srme2") return SrmeMethod::Dual;
    throw ValidationError("unknown marginal emissions method '" + s + "' (expected srme1 or srme2)");
}

Index EmissionRateSeries::zone_row(const std::string& zone) const {
    const auto it = std::find(zone_ids.begin(), zone_ids.end(), zone);
    return it == zone_ids.end() ? -1 : static_cast<Index>(it - zone_ids.begin());
}

double average_emission_rate(const GridModel& grid, const DispatchResult& result, const std::string& zone) {
    double emissions = 0.0, served = 0.0;
    if (zone.empty()) {
        emissions = result.total_emissions();
        served = result.total_served();
    } else {
        const int z = grid.zone_index(zone);
        if (z < 0) throw UnknownZone("unknown zone '" + zone + "'");
        emissions = result.emissions.row(z).sum();
        served = result.served_demand.row(z).sum();
    }
    if (!(served > 0.0))
        throw ZeroDemand("no served demand in " + (zone.empty() ? std::string("the system") : "zone '" + zone + "'"));
    return emissions / served;
}

EmissionRateSeries srme_uniform(const GridModel& grid, const CapacityDecisions& fixed,
                                const std::vector<std::string>& zones) {
    const double fraction = grid.config.srme1_fraction;
    if (!(fraction > 0.0)) throw ValidationError("srme1_fraction must be positive");
    const int h = grid.horizon();

    EmissionRateSeries out;
    out.method = SrmeMethod::Uniform;
    if (zones.empty())
        for (const auto& z : grid.zones) out.zone_ids.push_back(z.id);
    else
        out.zone_ids = zones;
    for (const auto& z : out.zone_ids)
        if (grid.zone_index(z) < 0) throw UnknownZone("unknown zone '" + z + "'");

    const auto base = solve_or_throw(build_operational_lp(grid, fixed), "base operational solve");
    const Eigen::RowVectorXd base_hourly = base.emissions.colwise().sum();
    out.base_id = "operational/base";
    out.comparison_id = "operational/+" + std::to_string(fraction * 100.0) + "% load";
    out.degenerate_hours = base.degenerate_hours;
    out.rates = Eigen::MatrixXd::Zero(static_cast<Index>(out.zone_ids.size()), h);
    out.rates_total_load_basis = out.rates;

    for (std::size_t k = 0; k < out.zone_ids.size(); ++k) {
        const auto& zone = out.zone_ids[k];
        const GridModel perturbed = perturb_demand(grid, {zone}, UniformAll{fraction});
        DispatchResult pert;
        try {
            pert = solve_or_throw(build_operational_lp(perturbed, fixed), "load in zone '" + zone + "' raised");
        } catch (const SolveFailed& e) {
            if (e.status() != lp::Status::Infeasible) throw;
            throw InfeasiblePerturbation("operations are infeasible with load in zone '" + zone + "' raised by " +
                                         std::to_string(fraction * 100.0) + "%");
        }
        const Eigen::RowVectorXd delta = pert.emissions.colwise().sum() - base_hourly;
        const Series& load = grid.zones[static_cast<std::size_t>(grid.zone_index(zone))].demand;
        const double total_added = fraction * load.sum();
        const Index row = static_cast<Index>(k);
        for (int t = 0; t < h; ++t) {
            const double added = fraction * load[t];
            out.rates(row, t) = added > 0.0 ? delta[t] / added : 0.0;
            out.rates_total_load_basis(row, t) = total_added > 0.0 ? delta[t] / total_added : 0.0;
        }
    }
    return out;
}

EmissionRateSeries srme_dual(const GridModel& grid, const CapacityDecisions& fixed) {
    const ExpansionModel model = build_operational_lp(grid, fixed);
    const auto step1 = lp::solve(model.problem);
    if (step1.status != lp::Status::Optimal) throw SolveFailed(step1.status, model.mode, "cost-minimizing step");

    DualStepInfo info;
    info.base_cost = step1.objective_value;
    info.cost_cap = info.base_cost + kCostCapSlack * std::max(1.0, std::abs(info.base_cost));

    lp::LpProblem second = with_le_row(model.problem, model.problem.objective, info.cost_cap);
    second.objective = model.emissions;
    const auto step2 = lp::solve(second);
    if (step2.status == lp::Status::Infeasible)
        throw CostCapInfeasible("emissions-minimizing step is infeasible under the cost cap " +
                                std::to_string(info.cost_cap));
    if (step2.status != lp::Status::Optimal)
        throw SolveFailed(step2.status, model.mode, "emissions-minimizing step");

    info.lambda = step2.ineq_duals[second.ineq_rhs.size() - 1];
    info.step2_cost = model.problem.objective.dot(step2.x);
    info.step2_emissions = step2.objective_value;

    EmissionRateSeries out;
    out.method = SrmeMethod::Dual;
    out.base_id = "operational/cost-min";
    out.comparison_id = "operational/emissions-min-under-cost-cap";
    for (const auto& z : grid.zones) out.zone_ids.push_back(z.id);
    const int h = grid.horizon();
    out.rates.resize(static_cast<Index>(grid.zones.size()), h);
    for (std::size_t z = 0; z < grid.zones.size(); ++z)
        for (int t = 0; t < h; ++t)
            out.rates(static_cast<Index>(z), t) =
                balance_dual(step2, model.index, z, t) - info.lambda * balance_dual(step1, model.index, z, t);
    out.degenerate_hours = decode(model, step1).degenerate_hours;
    out.dual = info;
    return out;
}

double attribute(const GridModel& grid, const EmissionRateSeries& rates, const Eigen::MatrixXd& delta_load) {
    if (delta_load.rows() != static_cast<Index>(grid.zones.size()) || rates.rates.cols() != delta_load.cols())
        throw DimensionMismatch("load change does not match the grid's zones and hours");
    double total = 0.0;
    for (std::size_t z = 0; z < grid.zones.size(); ++z) {
        const Index zi = static_cast<Index>(z);
        if (delta_load.row(zi).cwiseAbs().maxCoeff() == 0.0) continue;
        const Index row = rates.zone_row(grid.zones[z].id);
        if (row < 0) throw DimensionMismatch("no emission rates for zone '" + grid.zones[z].id + "'");
        total += rates.rates.row(row).dot(delta_load.row(zi));
    }
    return total;
}

ConsequentialReport compare_plans(const GridModel& base_grid, const DispatchResult& base, const GridModel& pert_grid,
                                  const DispatchResult& pert) {
    ConsequentialReport r;
    r.base_total_emissions = base.total_emissions();
    r.pert_total_emissions = pert.total_emissions();
    r.base_total_cost = base.total_cost;
    r.pert_total_cost = pert.total_cost;
    r.delta_load = consumption(pert) - consumption(base);
    r.delta_demand_mwh = r.delta_load.sum();
    if (std::abs(r.delta_demand_mwh) < 1.0)
        throw DegenerateDelta("consumption changes by " + std::to_string(r.delta_demand_mwh) +
                              " MWh; at least 1 MWh is needed for a long-run rate");
    r.lr_mer = r.consequential_emissions() / r.delta_demand_mwh;
    r.aer_attributed = average_emission_rate(base_grid, base) * r.delta_demand_mwh;

    std::map<std::string, CapacityDelta> by_tech;
    auto add = [&](const std::string& tech, double added, double retired) {
        auto& d = by_tech[tech];
        d.technology = tech;
        d.new_mw += added;
        d.retired_mw += retired;
    };
    for (std::size_t i = 0; i < pert_grid.generators.size(); ++i) {
        const Index gi = static_cast<Index>(i);
        add(to_string(pert_grid.generators[i].kind), pert.capacity.generator_new[gi] - base.capacity.generator_new[gi],
            pert.capacity.generator_retired[gi] - base.capacity.generator_retired[gi]);
    }
    for (Index k = 0; k < pert.capacity.storage_power_new.size(); ++k) {
        add("storage_power", pert.capacity.storage_power_new[k] - base.capacity.storage_power_new[k], 0.0);
        add("storage_energy", pert.capacity.storage_energy_new[k] - base.capacity.storage_energy_new[k], 0.0);
    }
    for (Index l = 0; l < pert.capacity.line_new.size(); ++l)
        add("transmission", pert.capacity.line_new[l] - base.capacity.line_new[l], 0.0);
    for (auto& [tech, d] : by_tech) r.capacity_deltas.push_back(d);

    std::map<std::string, double> generation;
    for (std::size_t i = 0; i < pert_grid.generators.size(); ++i) {
        const Index gi = static_cast<Index>(i);
        generation[to_string(pert_grid.generators[i].kind)] += pert.generation.row(gi).sum() - base.generation.row(gi).sum();
    }
    r.generation_deltas.assign(generation.begin(), generation.end());
    return r;
}

ConsequentialReport long_run_mer(const GridModel& grid, const ScaleEV& perturbation, const LongRunOptions& options) {
    const GridModel perturbed = perturb_demand(grid, options.target_zones, perturbation);
    const auto base = solve_or_throw(build_expansion_lp(grid), "base expansion");
    const auto pert = solve_or_throw(build_expansion_lp(perturbed), "EV demand scaled");
    ConsequentialReport r = compare_plans(grid, base, perturbed, pert);

    if (options.short_run) {
        r.sr_attributed = attribute(grid, *options.short_run, r.delta_load);
    } else if (options.attribute_short_run) {
        r.sr_attributed = attribute(grid, srme_dual(grid, base.capacity), r.delta_load);
    }

    if (grid.config.fleet_size && *grid.config.fleet_size > 0) {
        PerEvNormalization n;
        n.added_vehicles = *grid.config.fleet_size * grid.config.ev_penetration_multiplier * perturbation.fraction;
        n.tco2_per_1000_ev = r.consequential_emissions() / n.added_vehicles * 1000.0;
        n.icev = icev_comparison(r.lr_mer, n.added_vehicles, grid.config.ev_annual_mwh, grid.config.icev_tco2_per_year);
        r.per_ev = n;
    }
    return r;
}

IcevComparison icev_comparison(double lr_mer, double n_vehicles, double ev_annual_mwh, double icev_tco2) {
    if (!(n_vehicles > 0.0)) throw ValidationError("vehicle count must be positive");
    if (!(icev_tco2 > 0.0)) throw ValidationError("ICEV emissions must be positive");
    IcevComparison c;
    c.ev_tco2_per_vehicle = lr_mer * ev_annual_mwh;
    c.pct_reduction = 1.0 - c.ev_tco2_per_vehicle / icev_tco2;
    return c;
}

IcevComparison icev_comparison(const ConsequentialReport& report, double n_vehicles, double ev_annual_mwh,
                               double icev_tco2) {
    return icev_comparison(report.lr_mer, n_vehicles, ev_annual_mwh, icev_tco2);
}

}  // namespace gridmarg
