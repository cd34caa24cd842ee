#include "gridmarg/flex/scheduler.hpp"

#include <cmath>
#include <limits>

#include "gridmarg/lp/simplex.hpp"

namespace gridmarg {

const char* to_string(ScheduleSource source) {
    switch (source) {
        case ScheduleSource::CostMin: return "cost";
        case ScheduleSource::MinimizeSRME1: return "srme1";
        case ScheduleSource::MinimizeSRME2: return "srme2";
        case ScheduleSource::Fixed: return "fixed";
    }
    return "fixed";
}

ScheduleSource schedule_source_from_string(const std::string& s) {
    if (s == "cost") return ScheduleSource::CostMin;
    if (s == "srme1") return ScheduleSource::MinimizeSRME1;
    if (s == "srme2") return ScheduleSource::MinimizeSRME2;
    if (s == "fixed") return ScheduleSource::Fixed;
    throw ValidationError("unknown schedule source '" + s + "'");
}

Eigen::MatrixXd ChargingSchedule::by_zone(const GridModel& grid) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Index>(grid.zones.size()), served.cols());
    for (std::size_t f = 0; f < zone_ids.size(); ++f) {
        const int z = grid.zone_index(zone_ids[f]);
        if (z < 0) throw UnknownZone("unknown zone '" + zone_ids[f] + "'");
        out.row(z) += served.row(static_cast<Index>(f));
    }
    return out;
}

namespace {

ChargingSchedule empty_schedule(const GridModel& grid, ScheduleSource source) {
    ChargingSchedule s;
    s.source = source;
    for (const auto& f : grid.flexible_loads) {
        s.load_ids.push_back(f.id);
        s.zone_ids.push_back(f.zone_id);
    }
    s.served = Eigen::MatrixXd::Zero(static_cast<Index>(grid.flexible_loads.size()), grid.horizon());
    return s;
}

double proxy(const GridModel& grid, const EmissionRateSeries& rates, const ChargingSchedule& s) {
    return attribute(grid, rates, s.by_zone(grid));
}

}  // namespace

ChargingSchedule schedule_from(const GridModel& grid, const DispatchResult& result, ScheduleSource source) {
    ChargingSchedule s = empty_schedule(grid, source);
    s.served = result.flex_served;
    return s;
}

ChargingSchedule baseline_schedule(const GridModel& grid) {
    ChargingSchedule s = empty_schedule(grid, ScheduleSource::Fixed);
    for (std::size_t f = 0; f < grid.flexible_loads.size(); ++f)
        s.served.row(static_cast<Index>(f)) = requested_charging(grid.flexible_loads[f], grid.config).transpose();
    return s;
}

void check_schedule(const GridModel& grid, const ChargingSchedule& s) {
    if (s.served.rows() != static_cast<Index>(grid.flexible_loads.size()) || s.served.cols() != grid.horizon())
        throw ScheduleMismatch("schedule is " + std::to_string(s.served.rows()) + " x " +
                               std::to_string(s.served.cols()) + ", grid has " +
                               std::to_string(grid.flexible_loads.size()) + " flexible loads over " +
                               std::to_string(grid.horizon()) + " hours");
    for (std::size_t f = 0; f < grid.flexible_loads.size(); ++f) {
        const auto& load = grid.flexible_loads[f];
        if (f < s.load_ids.size() && s.load_ids[f] != load.id)
            throw ScheduleMismatch("schedule row " + std::to_string(f) + " is '" + s.load_ids[f] + "', expected '" +
                                   load.id + "'");
        const auto row = s.served.row(static_cast<Index>(f));
        if (row.size() > 0 && row.minCoeff() < -1e-9)
            throw ScheduleMismatch("schedule of '" + load.id + "' has negative charging");
        const double requested = requested_charging(load, grid.config).sum();
        if (std::abs(row.sum() - requested) > 1e-6)
            throw ScheduleMismatch("schedule of '" + load.id + "' serves " + std::to_string(row.sum()) +
                                   " MWh, request is " + std::to_string(requested) + " MWh");
    }
}

GridModel pin_schedule(const GridModel& grid, const ChargingSchedule& s) {
    check_schedule(grid, s);
    GridModel out = grid;
    const double m = grid.config.ev_penetration_multiplier;
    for (std::size_t f = 0; f < out.flexible_loads.size(); ++f) {
        auto& load = out.flexible_loads[f];
        load.baseline_profile = s.served.row(static_cast<Index>(f)).transpose().cwiseMax(0.0) / m;
        load.penetration_scale = 1.0;
        load.max_advance_hours = 0;
        load.max_delay_hours = 0;
        load.max_charge_rate_mw.reset();
    }
    return out;
}

double operational_consequential(const GridModel& grid, const CapacityDecisions& fixed,
                                 const ChargingSchedule& schedule) {
    const GridModel pinned = pin_schedule(grid, schedule);
    const GridModel more = perturb_demand(pinned, {}, ScaleEV{grid.config.perturbation_fraction});
    return solve_model(build_operational_lp(more, fixed)).total_emissions() -
           solve_model(build_operational_lp(pinned, fixed)).total_emissions();
}

ChargingSchedule cost_min_schedule(const GridModel& grid, const CapacityDecisions& fixed) {
    return schedule_from(grid, solve_model(build_operational_lp(grid, fixed)), ScheduleSource::CostMin);
}

DispatchResult solve_with_emission_penalty(const GridModel& grid, const CapacityDecisions& fixed,
                                           const EmissionRateSeries& rates, double penalty) {
    const ExpansionModel model = build_operational_lp(grid, fixed);
    lp::LpProblem penalized = model.problem;
    for (std::size_t f = 0; f < grid.flexible_loads.size(); ++f) {
        const Index row = rates.zone_row(grid.flexible_loads[f].zone_id);
        if (row < 0) throw DimensionMismatch("no emission rates for zone '" + grid.flexible_loads[f].zone_id + "'");
        const auto& served = model.index.flex_served[f];
        for (std::size_t t = 0; t < served.size(); ++t)
            penalized.objective[served[t]] += penalty * rates.rates(row, static_cast<Index>(t));
    }
    const auto s = lp::solve(penalized);
    if (s.status != lp::Status::Optimal) throw SolveFailed(s.status, model.mode, "emission-penalized schedule");
    // Costs are decoded against the unpenalized objective.
    return decode(model, s);
}

ScheduleResult schedule_min_srme(const GridModel& grid, const CapacityDecisions& fixed, SrmeMethod method,
                                 std::optional<double> penalty) {
    const double weight = penalty.value_or(grid.config.emissions_penalty);
    const ScheduleSource source =
        method == SrmeMethod::Uniform ? ScheduleSource::MinimizeSRME1 : ScheduleSource::MinimizeSRME2;
    std::vector<std::string> zones;
    for (const auto& z : grid.zones) zones.push_back(z.id);

    ScheduleResult out;
    out.schedule = cost_min_schedule(grid, fixed);
    double previous = operational_consequential(grid, fixed, out.schedule);
    out.trace.records.push_back({0, previous, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0});

    for (int k = 1; k <= grid.config.max_iterations; ++k) {
        // Rates are frozen from the current schedule: a parameter, not a decision.
        const GridModel pinned = pin_schedule(grid, out.schedule);
        const EmissionRateSeries rates =
            method == SrmeMethod::Uniform ? srme_uniform(pinned, fixed, zones) : srme_dual(pinned, fixed);
        ChargingSchedule next = schedule_from(grid, solve_with_emission_penalty(grid, fixed, rates, weight), source);

        IterationRecord rec;
        rec.iteration = k;
        rec.proxy_before = proxy(grid, rates, out.schedule);
        rec.proxy_after = proxy(grid, rates, next);
        rec.schedule_delta_norm = (next.served - out.schedule.served).norm();
        rec.consequential_tco2 = operational_consequential(grid, fixed, next);
        rec.rel_change = std::abs(rec.consequential_tco2 - previous) / std::max(std::abs(previous), 1e-9);
        out.trace.records.push_back(rec);
        out.trace.iterations_used = k;
        out.schedule = std::move(next);
        previous = rec.consequential_tco2;
        if (rec.rel_change < grid.config.convergence_threshold) {
            out.trace.converged = true;
            break;
        }
    }
    out.schedule.source = source;
    return out;
}

ConsequentialReport evaluate_fixed_schedule(const GridModel& grid, const ChargingSchedule& schedule,
                                            const LongRunOptions& options) {
    return long_run_mer(pin_schedule(grid, schedule), ScaleEV{grid.config.perturbation_fraction}, options);
}

}  // namespace gridmarg
