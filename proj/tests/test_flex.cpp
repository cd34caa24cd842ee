#include "doctest.h"

#include <filesystem>
#include <algorithm>
#include <cmath>
#include <random>

#include "gridmarg/flex/export.hpp"
#include "gridmarg/flex/scheduler.hpp"
#include "gridmarg/flex/window.hpp"
#include "gridmarg/lp/simplex.hpp"
#include "oracle/window.hpp"
#include "support/toys.hpp"

using namespace gridmarg;
namespace fs = std::filesystem;

namespace {

std::vector<double> to_vec(const Series& s) { return {s.data(), s.data() + s.size()}; }

Series row_of(const Eigen::MatrixXd& m, Index r) { return m.row(r).transpose(); }

DispatchResult solve_expansion(const GridModel& g) { return solve_model(build_expansion_lp(g)); }

// Demand 100 MW on 100 MW of coal (20 $/MWh) with gas (40 $/MWh) above it,
// except one dip hour where coal has room. A 10 MWh pulse at `pulse`.
GridModel pulse_grid(int pulse, int dip, int delay) {
    const int h = 24;
    Series d = Series::Constant(h, 100.0), ev = Series::Zero(h);
    d[dip] = 80.0;
    ev[pulse] = 10.0;
    GridModel g = test::single_zone(h, d);
    g.generators.push_back(test::thermal("coal", "z", 100.0, 20.0, 0.9));
    g.generators.push_back(test::thermal("gas", "z", 200.0, 40.0, 0.4));
    g.flexible_loads.push_back(test::ev_load("ev", "z", ev));
    g.flexible_loads[0].max_delay_hours = delay;
    return g;
}

EmissionRateSeries flat_rates(const GridModel& g, double value) {
    EmissionRateSeries r;
    r.method = SrmeMethod::Dual;
    for (const auto& z : g.zones) r.zone_ids.push_back(z.id);
    r.rates = Eigen::MatrixXd::Constant(static_cast<Index>(g.zones.size()), g.horizon(), value);
    return r;
}

}  // namespace

TEST_CASE("flexibility modes") {
    CHECK(FlexMode::parse("none") == FlexMode::none());
    CHECK(FlexMode::parse("delay8") == FlexMode::delay_only(8));
    CHECK(FlexMode::parse("window24") == FlexMode::window(12, 12));
    CHECK(FlexMode::parse("window3,5") == FlexMode::window(3, 5));
    CHECK(FlexMode::window(12, 12).label() == "window24");
    CHECK(FlexMode::window(3, 5).label() == "window3,5");
    CHECK(FlexMode::delay_only(8).label() == "delay8");
    CHECK_THROWS_AS(FlexMode::parse("window23"), ValidationError);
    CHECK_THROWS_AS(FlexMode::parse("later"), ValidationError);
    CHECK_THROWS_AS(FlexMode::parse("delay-1"), ValidationError);

    FlexibleLoad f;
    f.max_delay_hours = 8;
    CHECK(FlexMode::from_load(f) == FlexMode::delay_only(8));
    f.max_advance_hours = 2;
    CHECK(FlexMode::from_load(f) == FlexMode::window(2, 8));
}

TEST_CASE("window bounds agree with a per-hour deadline construction") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> mw(0.0, 10.0);
    std::uniform_int_distribution<int> hours(1, 30), span(0, 14);
    for (int trial = 0; trial < 200; ++trial) {
        const int h = hours(rng);
        Series req(h);
        for (int t = 0; t < h; ++t) req[t] = rng() % 3 ? mw(rng) : 0.0;
        const int a = span(rng), d = span(rng);
        const auto mode = trial % 3 == 0 ? FlexMode::delay_only(d) : FlexMode::window(a, d);
        const int adv = mode.kind == FlexMode::Kind::Window ? a : 0;
        const auto oracle = test::window_bounds(to_vec(req), adv, d);
        const double cap = req.maxCoeff() * 3.0 + 1e-3;
        const auto set = build_flex_constraints("x", req, cap, mode);
        for (int t = 0; t < h; ++t) {
            CHECK(set.cumulative_lower[t] == doctest::Approx(oracle.lower[t]).epsilon(1e-12));
            CHECK(set.cumulative_upper[t] == doctest::Approx(oracle.upper[t]).epsilon(1e-12));
        }
        CHECK(set.violation(req) < 1e-9);  // the request itself is always admissible
    }
}

TEST_CASE("no flexibility serves the request") {
    GridModel g = test::solar_midday_toy();
    const auto r = solve_expansion(g);
    const auto base = baseline_schedule(g);
    CHECK((r.flex_served - base.served).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(base.served.sum() == doctest::Approx(9.0));
}

TEST_CASE("delay-only pulse lands in the cheapest reachable hour") {
    // Enumeration: the pulse costs 40 $/MWh everywhere but the dip hour, where it
    // costs 20; it can move to hours [pulse, min(pulse + 8, 23)].
    for (int pulse : {6, 10, 18, 20}) {
        for (int dip = 0; dip < 24; ++dip) {
            const auto g = pulse_grid(pulse, dip, 8);
            const auto r = solve_model(build_operational_lp(g, CapacityDecisions::none(g)));
            const bool reachable = dip >= pulse && dip <= std::min(pulse + 8, 23);
            const double ev_cost = reachable ? 10.0 * 20.0 : 10.0 * 40.0;
            const double base_cost = 24 * 100.0 * 20.0 - 20.0 * 20.0;
            CAPTURE(pulse);
            CAPTURE(dip);
            CHECK(r.operational_cost == doctest::Approx(base_cost + ev_cost).epsilon(1e-10));
            if (reachable) CHECK(r.flex_served(0, dip) == doctest::Approx(10.0));
            // Never earlier than requested.
            for (int t = 0; t < pulse; ++t) CHECK(std::abs(r.flex_served(0, t)) < 1e-9);
        }
    }
}

TEST_CASE("flexibility modes on the solar midday toy") {
    const auto none = solve_expansion(test::solar_midday_toy());
    const auto delay = solve_expansion(test::solar_midday_toy(0, 8));
    const auto window = solve_expansion(test::solar_midday_toy(12, 12));

    // No flexibility charges on evening gas, delay moves to night coal, the
    // window moves to midday where solar costs 100 $/MW over 10 hours.
    const double ev = 9.0;
    CHECK(none.total_cost - delay.total_cost == doctest::Approx(ev * (40.0 - 20.0)).epsilon(1e-9));
    CHECK(delay.total_cost - window.total_cost == doctest::Approx(ev * (20.0 - 10.0)).epsilon(1e-9));
    for (int t = 0; t < 24; ++t) {
        const bool night = t >= 20 || t <= 6;
        const bool midday = t >= 7 && t <= 16;
        if (!night) CHECK(std::abs(delay.flex_served(0, t)) < 1e-9);
        if (!midday) CHECK(std::abs(window.flex_served(0, t)) < 1e-9);
    }
    // Solar is sized to midday demand plus an even spread of the charging.
    CHECK(window.capacity.generator_new[2] == doctest::Approx(100.0 + ev / 10.0));
    CHECK(window.flex_served.row(0).segment(7, 10).minCoeff() == doctest::Approx(0.9));
}

TEST_CASE("emission penalty") {
    GridModel g = test::storage_loop_toy();
    const auto fixed = CapacityDecisions::none(g);
    const auto cost_min = solve_model(build_operational_lp(g, fixed));

    SUBCASE("uniform rates leave the cost-minimizing schedule unchanged") {
        const auto r = solve_with_emission_penalty(g, fixed, flat_rates(g, 0.7), 1000.0);
        CHECK(r.operational_cost == doctest::Approx(cost_min.operational_cost).epsilon(1e-10));
        CHECK(r.total_emissions() == doctest::Approx(cost_min.total_emissions()).epsilon(1e-9));
    }
    SUBCASE("a zero-rate hour attracts all shiftable energy it can take") {
        auto rates = flat_rates(g, 1.0);
        rates.rates(0, 6) = 0.0;  // reachable from every request hour (4-9, +-4 h)
        GridModel wide = g;
        wide.flexible_loads[0].max_charge_rate_mw = 1000.0;
        const auto r = solve_with_emission_penalty(wide, fixed, rates, 1000.0);
        CHECK(r.flex_served(0, 6) == doctest::Approx(30.0));
        CHECK(r.flex_served.sum() == doctest::Approx(30.0));
    }
    SUBCASE("rates must cover the load's zone") {
        auto rates = flat_rates(g, 1.0);
        rates.zone_ids = {"elsewhere"};
        CHECK_THROWS_AS(solve_with_emission_penalty(g, fixed, rates, 1000.0), DimensionMismatch);
    }
}

TEST_CASE("minimizing the uniform rate pushes charging onto evening gas") {
    const GridModel g = test::solar_midday_toy(12, 12);
    const auto plan = solve_expansion(g);
    const auto cost = cost_min_schedule(g, plan.capacity);
    CHECK((cost.served - plan.flex_served).cwiseAbs().maxCoeff() < 1e-7);

    const auto result = schedule_min_srme(g, plan.capacity, SrmeMethod::Uniform);
    CHECK(result.trace.converged);
    CHECK(result.trace.iterations_used <= 10);
    CHECK(result.schedule.source == ScheduleSource::MinimizeSRME1);
    for (int t = 17; t <= 19; ++t) CHECK(result.schedule.served(0, t) >= 0.0);
    CHECK(result.schedule.served.row(0).segment(17, 3).sum() == doctest::Approx(9.0));

    // Iteration 0 is the cost-minimizing start; every later iteration lowers the proxy.
    const auto& recs = result.trace.records;
    REQUIRE(recs.size() >= 2);
    CHECK(std::isnan(recs[0].rel_change));
    CHECK(recs[0].consequential_tco2 == doctest::Approx(0.25 * 9.0 * 0.9));
    CHECK(recs.back().consequential_tco2 == doctest::Approx(0.25 * 9.0 * 0.4));
    for (std::size_t k = 1; k < recs.size(); ++k) CHECK(recs[k].proxy_after <= recs[k].proxy_before + 1e-9);

    // Long run: the evening schedule keeps gas on the margin, the cost-minimizing
    // one draws more solar.
    const auto lr_cost = evaluate_fixed_schedule(g, cost);
    const auto lr_srme = evaluate_fixed_schedule(g, result.schedule);
    CHECK(lr_cost.consequential_emissions() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lr_srme.consequential_emissions() == doctest::Approx(0.25 * 9.0 * 0.4));
    CHECK(lr_srme.consequential_emissions() > lr_cost.consequential_emissions());
}

TEST_CASE("iteration on the storage toy") {
    const GridModel g = test::storage_loop_toy();
    const auto fixed = CapacityDecisions::none(g);
    for (auto method : {SrmeMethod::Uniform, SrmeMethod::Dual}) {
        CAPTURE(to_string(method));
        const auto result = schedule_min_srme(g, fixed, method);
        CHECK(result.trace.converged);
        CHECK(result.trace.iterations_used <= 10);
        check_schedule(g, result.schedule);
        REQUIRE(result.trace.records.size() >= 2);
        const auto& first = result.trace.records[1];
        CHECK(first.proxy_after <= first.proxy_before + 1e-9);
    }
}

TEST_CASE("evaluating the cost-minimizing schedule reproduces the plan") {
    for (auto [a, d] : {std::pair{0, 8}, std::pair{12, 12}, std::pair{0, 0}}) {
        const GridModel g = test::solar_midday_toy(a, d);
        const auto plan = solve_expansion(g);
        const auto pinned = solve_expansion(pin_schedule(g, schedule_from(g, plan, ScheduleSource::CostMin)));
        CHECK(pinned.total_cost == doctest::Approx(plan.total_cost).epsilon(1e-6));
        CHECK(pinned.total_emissions() == doctest::Approx(plan.total_emissions()).epsilon(1e-6));
    }
    // The same holds with a penetration multiplier in play.
    GridModel g = test::storage_loop_toy();
    g.config.ev_penetration_multiplier = 2.0;
    const auto plan = solve_expansion(g);
    const auto pinned = solve_expansion(pin_schedule(g, schedule_from(g, plan, ScheduleSource::CostMin)));
    CHECK(pinned.total_cost == doctest::Approx(plan.total_cost).epsilon(1e-6));
}

TEST_CASE("schedule mismatch") {
    const GridModel g = test::storage_loop_toy();
    auto s = baseline_schedule(g);
    CHECK_NOTHROW(check_schedule(g, s));

    auto short_energy = s;
    short_energy.served(0, 16) -= 1.0;
    CHECK_THROWS_AS(check_schedule(g, short_energy), ScheduleMismatch);
    CHECK_THROWS_AS(pin_schedule(g, short_energy), ScheduleMismatch);

    auto negative = s;
    negative.served(0, 16) -= 1.0;
    negative.served(0, 0) += 1.0;
    negative.served(0, 1) -= 1.0;
    negative.served(0, 2) += 1.0;
    CHECK_THROWS_AS(check_schedule(g, negative), ScheduleMismatch);

    auto wrong_shape = s;
    wrong_shape.served = Eigen::MatrixXd::Zero(1, 12);
    CHECK_THROWS_AS(check_schedule(g, wrong_shape), ScheduleMismatch);

    auto wrong_id = s;
    wrong_id.load_ids = {"truck"};
    CHECK_THROWS_AS(evaluate_fixed_schedule(g, wrong_id), ScheduleMismatch);
}

TEST_CASE("random windows: admissible schedules or a rejection") {
    std::mt19937 rng(20261018);
    std::uniform_real_distribution<double> mw(0.0, 8.0), cap_scale(0.2, 3.0);
    std::uniform_int_distribution<int> hours(2, 36), span(0, 12), kind(0, 2);
    int rejected = 0, solved = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int h = hours(rng);
        Series req(h);
        for (int t = 0; t < h; ++t) req[t] = rng() % 2 ? mw(rng) : 0.0;
        if (req.sum() <= 0.0) req[0] = 1.0;
        const int k = kind(rng);
        const auto mode = k == 0   ? FlexMode::none()
                          : k == 1 ? FlexMode::delay_only(span(rng))
                                   : FlexMode::window(span(rng), span(rng));
        const double cap = req.maxCoeff() * cap_scale(rng);
        const int adv = mode.kind == FlexMode::Kind::Window ? mode.advance : 0;
        const int del = mode.kind == FlexMode::Kind::NoFlex ? 0 : mode.delay;
        const auto witness = test::latest_schedule(test::window_bounds(to_vec(req), adv, del),
                                                   mode.kind == FlexMode::Kind::NoFlex ? 1e300 : cap);
        CAPTURE(trial);
        if (mode.kind == FlexMode::Kind::NoFlex) {
            CHECK_NOTHROW(build_flex_constraints("x", req, cap, mode));
            continue;
        }
        if (!witness) {
            CHECK_THROWS_AS(build_flex_constraints("x", req, cap, mode), InfeasibleWindow);
            ++rejected;
            continue;
        }
        CHECK(test::window_violation(to_vec(req), adv, del, cap, *witness) < 1e-7);

        // Cheapest schedule under random hourly prices respects the window.
        const auto set = build_flex_constraints("x", req, cap, mode);
        lp::LpBuilder b;
        const auto vars = set.add_to(b);
        for (int t = 0; t < h; ++t) b.set_cost(vars.served[static_cast<std::size_t>(t)], mw(rng));
        const auto sol = lp::solve(b.build());
        REQUIRE(sol.status == lp::Status::Optimal);
        std::vector<double> served(h);
        for (int t = 0; t < h; ++t) served[t] = sol.x[vars.served[static_cast<std::size_t>(t)]];
        CHECK(test::window_violation(to_vec(req), adv, del, cap, served) < 1e-7);
        ++solved;
    }
    CHECK(rejected > 0);
    CHECK(solved > 0);
}

TEST_CASE("schedule and trace export") {
    const GridModel g = test::storage_loop_toy();
    const auto result = schedule_min_srme(g, CapacityDecisions::none(g), SrmeMethod::Dual);
    const fs::path dir = fs::temp_directory_path() / "gridmarg_test_flex";
    fs::create_directories(dir);
    write_schedule_csv(result.schedule, dir / "schedule.csv");
    const auto back = read_schedule_csv(dir / "schedule.csv");
    CHECK(back.source == result.schedule.source);
    CHECK(back.load_ids == result.schedule.load_ids);
    CHECK(back.zone_ids == result.schedule.zone_ids);
    CHECK(back.served == result.schedule.served);

    const std::string trace = iteration_trace_csv(result.trace);
    CHECK(trace.rfind("iteration,consequential_tco2,rel_change,schedule_delta_norm,proxy_before,proxy_after\n", 0) ==
          0);
    CHECK(trace.find("\n0,") != std::string::npos);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == static_cast<long>(result.trace.records.size()) + 1);
    fs::remove_all(dir);
}
