#pragma once

#include <string>
#include <vector>

#include "gridmarg/grid/model.hpp"
#include "gridmarg/lp/problem.hpp"

namespace gridmarg {

/// Charging flexibility of one load.
///   NoFlex        served equals the request every hour
///   DelayOnly(D)  energy may be postponed by up to D hours, never advanced
///   Window(A, D)  energy may be advanced by up to A or postponed by up to D hours
struct FlexMode {
    enum class Kind { NoFlex, DelayOnly, Window };
    Kind kind = Kind::NoFlex;
    int advance = 0;
    int delay = 0;

    static FlexMode none() { return {}; }
    static FlexMode delay_only(int hours) { return {Kind::DelayOnly, 0, hours}; }
    static FlexMode window(int advance_hours, int delay_hours) { return {Kind::Window, advance_hours, delay_hours}; }
    /// Mode implied by a load's max_advance_hours / max_delay_hours.
    static FlexMode from_load(const FlexibleLoad& load);
    /// Parses "none", "delay8", "window24" and the general forms "delay<D>", "window<A>,<D>".
    static FlexMode parse(const std::string& text);

    std::string label() const;
    friend bool operator==(const FlexMode&, const FlexMode&) = default;
};

/// Returns a copy of `grid` with every flexible load's window set to `mode`.
GridModel with_flex_mode(const GridModel& grid, const FlexMode& mode);

struct FlexVariables {
    std::vector<lp::Index> served;      // per hour
    std::vector<lp::Index> cumulative;  // per hour, empty for NoFlex
};

/// Cumulative-energy window for one flexible load. With B the cumulative request,
/// served energy through hour t must lie in [B(t - delay), B(t + advance)],
/// clamped at the horizon edges, and total served equals total requested.
struct FlexConstraintSet {
    std::string load_id;
    std::string zone_id;
    FlexMode mode;
    Series requested;
    double rate_cap = 0.0;
    Series cumulative_lower;
    Series cumulative_upper;

    double total_energy() const { return requested.sum(); }
    int horizon() const { return static_cast<int>(requested.size()); }

    /// Adds served/cumulative variables and linking rows to `builder`.
    FlexVariables add_to(lp::LpBuilder& builder) const;

    /// Largest violation of any window, rate, or energy constraint by `served` (0 when admissible).
    double violation(const Series& served) const;
};

/// Throws InfeasibleWindow when the rate cap cannot clear the cumulative floor.
FlexConstraintSet build_flex_constraints(const FlexibleLoad& load, const ScenarioConfig& config, const FlexMode& mode);
FlexConstraintSet build_flex_constraints(const std::string& load_id, const Series& requested, double rate_cap,
                                         const FlexMode& mode);

}  // namespace gridmarg
