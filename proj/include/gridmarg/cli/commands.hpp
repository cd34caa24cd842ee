#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "gridmarg/flex/window.hpp"
#include "gridmarg/metrics/emissions.hpp"
#include "gridmarg/planner/expansion.hpp"

namespace gridmarg::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kInfeasible = 2,
    kUnbounded = 3,
    kComputationError = 4,  // numerical failure, degenerate perturbation, ...
};

/// Runs `body`, translating library exceptions into exit codes with a
/// diagnostic on `err`.
int guarded(std::ostream& err, const std::function<int()>& body);

struct SolveArgs {
    fs::path scenario;
    PlanningMode mode = PlanningMode::CapacityExpansion;
    fs::path out = ".";
};
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

enum class MetricMethod { Aer, Srme1, Srme2, LrMer };
MetricMethod metric_method_from_string(const std::string& s);

struct MetricsArgs {
    fs::path scenario;
    MetricMethod method = MetricMethod::Aer;
    std::string zone = "all";  // zone id, "all", or "each-separately"
    fs::path out = ".";
};
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err);

struct ScheduleArgs {
    fs::path scenario;
    std::string signal = "cost";  // cost, srme1, srme2
    FlexMode flex;
    fs::path out = ".";
};
int cmd_schedule(const ScheduleArgs& args, std::ostream& out, std::ostream& err);

int cmd_validate(const fs::path& scenario, std::ostream& out, std::ostream& err);

/// Target zone sets for a "--zone" style argument: "all" gives one empty set
/// (every zone), "each-separately" one set per zone, anything else a single zone.
std::vector<std::set<std::string>> target_sets(const GridModel& grid, const std::string& zone);

/// Label used in file names and result rows for a target zone set.
std::string target_label(const std::set<std::string>& targets);

}  // namespace gridmarg::cli
