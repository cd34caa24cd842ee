#include "gridmarg/flex/window.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include "gridmarg/errors.hpp"

namespace gridmarg {

FlexMode FlexMode::from_load(const FlexibleLoad& load) {
    if (load.max_advance_hours == 0 && load.max_delay_hours == 0) return none();
    if (load.max_advance_hours == 0) return delay_only(load.max_delay_hours);
    return window(load.max_advance_hours, load.max_delay_hours);
}

FlexMode FlexMode::parse(const std::string& text) {
    auto number = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ValidationError("bad flexibility mode '" + text + "'");
        return std::stoi(s);
    };
    if (text == "none") return none();
    if (text.rfind("delay", 0) == 0) return delay_only(number(text.substr(5)));
    if (text.rfind("window", 0) == 0) {
        const std::string rest = text.substr(6);
        const auto comma = rest.find(',');
        if (comma != std::string::npos) return window(number(rest.substr(0, comma)), number(rest.substr(comma + 1)));
        const int total = number(rest);
        if (total % 2 != 0) throw ValidationError("window span must be even in '" + text + "'");
        return window(total / 2, total / 2);
    }
    throw ValidationError("bad flexibility mode '" + text + "' (expected none, delay<D>, window<N>)");
}

std::string FlexMode::label() const {
    switch (kind) {
        case Kind::NoFlex: return "none";
        case Kind::DelayOnly: return "delay" + std::to_string(delay);
        case Kind::Window:
            if (advance == delay) return "window" + std::to_string(advance + delay);
            return "window" + std::to_string(advance) + "," + std::to_string(delay);
    }
    return "none";
}

GridModel with_flex_mode(const GridModel& grid, const FlexMode& mode) {
    GridModel out = grid;
    for (auto& f : out.flexible_loads) {
        f.max_advance_hours = mode.kind == FlexMode::Kind::Window ? mode.advance : 0;
        f.max_delay_hours = mode.kind == FlexMode::Kind::NoFlex ? 0 : mode.delay;
    }
    return out;
}

FlexConstraintSet build_flex_constraints(const FlexibleLoad& load, const ScenarioConfig& config,
                                         const FlexMode& mode) {
    auto set = build_flex_constraints(load.id, requested_charging(load, config), max_charge_rate(load, config), mode);
    set.zone_id = load.zone_id;
    return set;
}

FlexConstraintSet build_flex_constraints(const std::string& load_id, const Series& requested, double rate_cap,
                                         const FlexMode& mode) {
    if (mode.advance < 0 || mode.delay < 0)
        throw ValidationError("flexible load '" + load_id + "': negative flexibility window");
    FlexConstraintSet set;
    set.load_id = load_id;
    set.mode = mode;
    set.requested = requested;
    set.rate_cap = rate_cap;

    const int h = static_cast<int>(requested.size());
    const int advance = mode.kind == FlexMode::Kind::Window ? mode.advance : 0;
    const int delay = mode.kind == FlexMode::Kind::NoFlex ? 0 : mode.delay;

    Series cum(h);
    double running = 0.0;
    for (int t = 0; t < h; ++t) {
        running += requested[t];
        cum[t] = running;
    }
    auto cum_at = [&](int k) { return k < 0 ? 0.0 : cum[std::min(k, h - 1)]; };
    set.cumulative_lower.resize(h);
    set.cumulative_upper.resize(h);
    for (int t = 0; t < h; ++t) {
        set.cumulative_lower[t] = cum_at(t - delay);
        set.cumulative_upper[t] = cum_at(t + advance);
    }
    if (h > 0) set.cumulative_lower[h - 1] = set.cumulative_upper[h - 1] = cum[h - 1];

    if (mode.kind == FlexMode::Kind::NoFlex) return set;  // served is pinned to the request, no rate limit

    // Earliest-charging envelope: the largest cumulative energy reachable at each hour.
    double reach = 0.0;
    for (int t = 0; t < h; ++t) {
        reach = std::min(set.cumulative_upper[t], reach + rate_cap);
        const double floor = set.cumulative_lower[t];
        if (reach < floor - 1e-9 * std::max(1.0, floor))
            throw InfeasibleWindow("flexible load '" + load_id + "': charge rate " + std::to_string(rate_cap) +
                                   " MW cannot deliver the energy required by hour " + std::to_string(t) + " (" +
                                   mode.label() + ")");
    }
    return set;
}

FlexVariables FlexConstraintSet::add_to(lp::LpBuilder& b) const {
    FlexVariables vars;
    const int h = horizon();
    if (mode.kind == FlexMode::Kind::NoFlex) {
        for (int t = 0; t < h; ++t) vars.served.push_back(b.add_variable(0.0, requested[t], requested[t]));
        return vars;
    }
    for (int t = 0; t < h; ++t) {
        vars.served.push_back(b.add_variable(0.0, 0.0, rate_cap));
        vars.cumulative.push_back(b.add_variable(0.0, cumulative_lower[t], cumulative_upper[t]));
    }
    for (int t = 0; t < h; ++t) {
        std::vector<lp::LpBuilder::Term> row{{vars.cumulative[static_cast<std::size_t>(t)], 1.0},
                                             {vars.served[static_cast<std::size_t>(t)], -1.0}};
        if (t > 0) row.emplace_back(vars.cumulative[static_cast<std::size_t>(t - 1)], -1.0);
        b.add_eq(row, 0.0);
    }
    return vars;
}

double FlexConstraintSet::violation(const Series& served) const {
    const int h = horizon();
    if (served.size() != h) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    double running = 0.0;
    for (int t = 0; t < h; ++t) {
        const double s = served[t];
        worst = std::max(worst, -s);
        if (mode.kind == FlexMode::Kind::NoFlex) {
            worst = std::max(worst, std::abs(s - requested[t]));
            continue;
        }
        worst = std::max(worst, s - rate_cap);
        running += s;
        worst = std::max(worst, running - cumulative_upper[t]);
        worst = std::max(worst, cumulative_lower[t] - running);
    }
    worst = std::max(worst, std::abs(served.sum() - total_energy()));
    return worst;
}

}  // namespace gridmarg
