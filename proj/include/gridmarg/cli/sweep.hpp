#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridmarg/flex/window.hpp"

namespace gridmarg::cli {

/// Cartesian sweep over EV penetration, cost multipliers, flexibility and
/// target zones.
struct SweepSpec {
    std::vector<double> ev_multipliers{0.85, 0.90, 0.95, 1.00, 1.05, 1.10, 1.15};
    std::vector<double> renewable_capex_multipliers{1.0};
    std::vector<double> gas_price_multipliers{1.0};
    // "scenario" keeps each load's own window, anything else is a FlexMode label.
    std::vector<std::string> flexibility_modes{"scenario"};
    std::string target_zones = "all";  // "all", "each-separately", or one zone id
    std::vector<std::string> target_zone_list;  // explicit zone list, overrides target_zones when non-empty

    /// Throws ValidationError on empty lists or non-positive multipliers.
    void validate() const;
};

/// Parses the JSON sweep document. Missing keys keep their defaults.
SweepSpec parse_sweep_spec(const std::string& json_text);

struct SweepRun {
    std::string id;  // run_0000, run_0001, ... in Cartesian order
    double ev_multiplier = 1.0;
    double renewable_capex_multiplier = 1.0;
    double gas_price_multiplier = 1.0;
    std::string flex;    // "scenario" or a FlexMode label
    std::string target;  // "all" or a zone id
};

/// Runs in Cartesian order: EV multiplier slowest, target zone fastest.
std::vector<SweepRun> expand(const SweepSpec& spec, const std::vector<std::string>& zone_ids);

struct SweepArgs {
    std::filesystem::path scenario;
    std::filesystem::path spec;
    int parallel = 1;
    std::filesystem::path out = ".";
};

/// Default worker count: GRIDMARG_THREADS when set to a positive integer, else 1.
int default_parallelism();

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

}  // namespace gridmarg::cli
