#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "gridmarg/metrics/emissions.hpp"
#include "gridmarg/planner/expansion.hpp"

namespace gridmarg {

enum class ScheduleSource { CostMin, MinimizeSRME1, MinimizeSRME2, Fixed };

const char* to_string(ScheduleSource source);  // "cost", "srme1", "srme2", "fixed"
ScheduleSource schedule_source_from_string(const std::string& s);

/// Served charging of every flexible load, rows in GridModel order.
struct ChargingSchedule {
    ScheduleSource source = ScheduleSource::Fixed;
    std::vector<std::string> load_ids;
    std::vector<std::string> zone_ids;  // zone of each load
    Eigen::MatrixXd served;             // load x hour, MW

    /// Served charging summed per zone, zone x hour in GridModel zone order.
    Eigen::MatrixXd by_zone(const GridModel& grid) const;
};

/// Schedule as decoded from a solved model of `grid`.
ChargingSchedule schedule_from(const GridModel& grid, const DispatchResult& result, ScheduleSource source);

/// Flexible-load requests of `grid` as a schedule (what NoFlex serves).
ChargingSchedule baseline_schedule(const GridModel& grid);

/// Throws ScheduleMismatch unless `schedule` has one row per flexible load of
/// `grid`, no negative entries, and per-load energy within 1e-6 MWh of the request.
void check_schedule(const GridModel& grid, const ChargingSchedule& schedule);

/// Copy of `grid` whose flexible loads are rigid and request exactly `schedule`.
GridModel pin_schedule(const GridModel& grid, const ChargingSchedule& schedule);

struct IterationRecord {
    int iteration = 0;
    double consequential_tco2 = 0.0;  // operational emissions change for the EV increase
    double rel_change = 0.0;          // vs previous iteration, NaN for iteration 0
    double schedule_delta_norm = 0.0; // Frobenius norm of the schedule change
    double proxy_before = 0.0;        // rates x previous schedule
    double proxy_after = 0.0;         // rates x new schedule
};

struct IterationTrace {
    std::vector<IterationRecord> records;  // iteration 0 is the cost-minimizing start
    bool converged = false;
    int iterations_used = 0;
};

/// Operational emissions with the schedule scaled by 1 + perturbation_fraction
/// minus those with the schedule as is, capacities fixed.
double operational_consequential(const GridModel& grid, const CapacityDecisions& fixed,
                                 const ChargingSchedule& schedule);

/// Cost-minimizing schedule of the flexible operational model.
ChargingSchedule cost_min_schedule(const GridModel& grid, const CapacityDecisions& fixed);

/// Solves the flexible operational model with penalty x rate added to the
/// cost of every MWh of served charging. Reported costs exclude the penalty;
/// prices are those of the penalized problem.
DispatchResult solve_with_emission_penalty(const GridModel& grid, const CapacityDecisions& fixed,
                                           const EmissionRateSeries& rates, double penalty);

struct ScheduleResult {
    ChargingSchedule schedule;
    IterationTrace trace;
};

/// Iterates: rates from the current schedule, re-solve with the emissions
/// penalty, stop once the consequential check changes by less than
/// convergence_threshold or after max_iterations. Non-convergence is reported
/// in the trace, not thrown. `penalty` defaults to config.emissions_penalty.
ScheduleResult schedule_min_srme(const GridModel& grid, const CapacityDecisions& fixed, SrmeMethod method,
                                 std::optional<double> penalty = std::nullopt);

/// Long-run evaluation: capacity expansion with flexible loads pinned to
/// `schedule`, at base and scaled by 1 + perturbation_fraction.
ConsequentialReport evaluate_fixed_schedule(const GridModel& grid, const ChargingSchedule& schedule,
                                            const LongRunOptions& options = {});

}  // namespace gridmarg
