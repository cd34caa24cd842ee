// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gridmarg/cli/sweep.hpp"
#include "gridmarg/flex/scheduler.hpp"
#include "gridmarg/grid/scenario_io.hpp"
#include "gridmarg/lp/simplex.hpp"
#include "gridmarg/metrics/emissions.hpp"
#include "oracle/finite_difference.hpp"
#include "oracle/vertex_enum.hpp"
#include "oracle/window.hpp"
#include "support/random_lp.hpp"
#include "support/toys.hpp"

using namespace gridmarg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 3) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

DispatchResult solve_expansion(const GridModel& g) { return solve_model(build_expansion_lp(g)); }

// Every step-two solve made by the checks below, for criterion 3.
std::vector<DualStepInfo> g_dual_steps;

EmissionRateSeries dual_rates(const GridModel& g, const CapacityDecisions& c) {
    auto r = srme_dual(g, c);
    g_dual_steps.push_back(*r.dual);
    return r;
}

// Duality gap and complementary slackness from the raw solution vectors.
struct Residuals {
    double gap = 0.0, complementarity = 0.0, dual_infeasibility = 0.0, primal_infeasibility = 0.0;
};

Residuals residuals(const lp::LpProblem& p, const lp::LpSolution& s) {
    Residuals r;
    const Eigen::VectorXd aeq_x = p.eq_matrix * s.x;
    const Eigen::VectorXd ale_x = p.ineq_matrix * s.x;
    const Eigen::VectorXd rc =
        p.objective - Eigen::MatrixXd(p.eq_matrix).transpose() * s.eq_duals + Eigen::MatrixXd(p.ineq_matrix).transpose() * s.ineq_duals;
    double dual_obj = s.eq_duals.dot(p.eq_rhs) - s.ineq_duals.dot(p.ineq_rhs);
    for (lp::Index j = 0; j < p.num_variables(); ++j) {
        const double lo = p.lower[j], hi = p.upper[j], x = s.x[j];
        r.primal_infeasibility = std::max({r.primal_infeasibility, lo - x, x - hi});
        if (rc[j] > 0) {
            if (!std::isfinite(lo)) r.dual_infeasibility = std::max(r.dual_infeasibility, rc[j]);
            else dual_obj += rc[j] * lo, r.complementarity = std::max(r.complementarity, std::abs(rc[j] * (x - lo)));
        } else if (rc[j] < 0) {
            if (!std::isfinite(hi)) r.dual_infeasibility = std::max(r.dual_infeasibility, -rc[j]);
            else dual_obj += rc[j] * hi, r.complementarity = std::max(r.complementarity, std::abs(rc[j] * (hi - x)));
        }
    }
    for (lp::Index i = 0; i < p.num_eq(); ++i)
        r.primal_infeasibility = std::max(r.primal_infeasibility, std::abs(aeq_x[i] - p.eq_rhs[i]));
    for (lp::Index i = 0; i < p.num_ineq(); ++i) {
        r.primal_infeasibility = std::max(r.primal_infeasibility, ale_x[i] - p.ineq_rhs[i]);
        r.dual_infeasibility = std::max(r.dual_infeasibility, -s.ineq_duals[i]);
        r.complementarity = std::max(r.complementarity, std::abs(s.ineq_duals[i] * (p.ineq_rhs[i] - ale_x[i])));
    }
    const double primal_obj = p.objective.dot(s.x);
    r.gap = std::abs(primal_obj - dual_obj) / std::max(1.0, std::abs(primal_obj));
    return r;
}

Outcome c1_lp_validity() {
    std::mt19937_64 rng(1);
    double worst = 0.0;
    int large = 0;
    for (int trial = 0; trial < 30; ++trial) {
        test::RandomLpShape shape;
        shape.variables = 20 + trial;  // 20..49
        shape.equalities = 2 + trial % 6;
        shape.inequalities = 8 + trial % 15;
        shape.finite_upper = trial % 3 != 0;
        shape.density = 0.35;
        const auto p = test::random_feasible_lp(rng, shape);
        const auto s = lp::solve(p);
        if (s.status != lp::Status::Optimal) return {false, "random LP " + std::to_string(trial) + " not optimal"};
        const auto r = residuals(p, s);
        worst = std::max({worst, r.gap, r.complementarity, r.dual_infeasibility, r.primal_infeasibility});
        ++large;
    }
    double vertex_err = 0.0;
    int small = 0;
    for (int trial = 0; trial < 300; ++trial) {
        test::RandomLpShape shape;
        shape.variables = 2 + trial % 5;  // 2..6
        shape.equalities = trial % 3 == 0 ? 0 : 1;
        shape.inequalities = 1 + trial % 7;
        const auto p = test::random_feasible_lp(rng, shape);
        const auto oracle = test::vertex_enumeration(p);
        const auto s = lp::solve(p);
        if (!oracle || s.status != lp::Status::Optimal) return {false, "small LP " + std::to_string(trial) + " failed"};
        vertex_err = std::max(vertex_err, std::abs(s.objective_value - oracle->objective));
        const auto r = residuals(p, s);
        worst = std::max({worst, r.gap, r.complementarity, r.dual_infeasibility, r.primal_infeasibility});
        ++small;
    }
    return {worst <= 1e-6 && vertex_err <= 1e-8,
            std::to_string(large) + " LPs of 20-49 vars + " + std::to_string(small) +
                " of <=6 vars; max KKT residual " + fmt(worst) + ", max |obj - vertex oracle| " + fmt(vertex_err)};
}

Outcome c2_dual_vs_finite_difference() {
    const GridModel g = test::three_unit_storage_toy();
    const auto fixed = CapacityDecisions::none(g);
    const auto rates = dual_rates(g, fixed);
    const double base = test::operational_emissions(g, fixed);
    double worst = 0.0;
    int degenerate = 0;
    for (int t = 0; t < g.horizon(); ++t) {
        worst = std::max(worst, std::abs(rates.rates(0, t) - test::finite_difference_rate(g, fixed, "z", t, base)));
        degenerate += rates.degenerate_hours[static_cast<std::size_t>(t)] ? 1 : 0;
    }
    return {worst <= 1e-4 && degenerate == 0, "48 hours, " + std::to_string(degenerate) +
                                                   " degenerate, max |rate - finite difference| " + fmt(worst)};
}

Outcome c4_merit_order() {
    // Random single-zone stacks; oracle: walk the stack in cost order until it covers load.
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> cost(10.0, 90.0), factor(0.0, 1.2), cap(20.0, 80.0);
    double worst = 0.0;
    int hours = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const int h = 24, n = 3 + trial % 4;
        GridModel g = test::single_zone(h, Series::Zero(h));
        std::vector<std::pair<double, int>> order;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            g.generators.push_back(test::thermal("u" + std::to_string(i), "z", cap(rng), cost(rng), factor(rng)));
            order.emplace_back(g.generators.back().marginal_cost(), i);
            total += g.generators.back().existing_cap_mw;
        }
        std::sort(order.begin(), order.end());
        std::vector<double> breakpoints{0.0};
        for (const auto& [c, i] : order) breakpoints.push_back(breakpoints.back() + g.generators[static_cast<std::size_t>(i)].existing_cap_mw);
        // Loads at least 0.5 MW inside a step.
        std::uniform_real_distribution<double> load(1.0, total - 1.0);
        for (int t = 0; t < h; ++t) {
            double d;
            do d = load(rng);
            while (std::any_of(breakpoints.begin(), breakpoints.end(), [&](double b) { return std::abs(d - b) < 0.5; }));
            g.zones[0].demand[t] = d;
        }
        const auto rates = dual_rates(g, CapacityDecisions::none(g));
        for (int t = 0; t < h; ++t) {
            double served = 0.0, expected = 0.0;
            for (const auto& [c, i] : order) {
                served += g.generators[static_cast<std::size_t>(i)].existing_cap_mw;
                if (served > g.zones[0].demand[t]) {
                    expected = g.generators[static_cast<std::size_t>(i)].emissions_factor;
                    break;
                }
            }
            worst = std::max(worst, std::abs(rates.rates(0, t) - expected));
            ++hours;
        }
    }
    return {worst <= 1e-9, std::to_string(hours) + " hours on 25 stacks, max |rate - marginal factor| " + fmt(worst)};
}

Outcome c5_long_run_below_short_run() {
    const GridModel g = test::breakeven_toy(100.0);
    const auto report = long_run_mer(g, ScaleEV{g.config.perturbation_fraction});
    const auto plan = solve_expansion(g);
    const auto rates = dual_rates(g, plan.capacity);
    const Eigen::MatrixXd load = plan.served_demand;
    const double sr = (rates.rates.array() * load.array()).sum() / load.sum();
    const double closed_form = 0.9 * 0.25 * (1.0 - 0.55 / 0.6);
    return {report.lr_mer <= 0.1 * sr && std::abs(report.lr_mer - closed_form) <= 1e-6,
            "LR " + fmt(report.lr_mer, 6) + " (closed form " + fmt(closed_form, 6) + ") vs demand-weighted SR " +
                fmt(sr, 6)};
}

Outcome c6_frozen_structure() {
    std::vector<std::pair<std::string, GridModel>> cases;
    {
        GridModel g = test::single_zone(24, Series::Constant(24, 90.0));
        g.generators.push_back(test::thermal("coal", "z", 100.0, 20.0, 0.9));
        g.generators.push_back(test::thermal("gas", "z", 200.0, 30.0, 0.4));
        g.flexible_loads.push_back(test::ev_load("ev", "z", Series::Constant(24, 5.0)));
        cases.emplace_back("coal margin", g);
        g.zones[0].demand.setConstant(150.0);
        cases.emplace_back("gas margin", g);
    }
    {
        GridModel g = load_scenario(fs::path(GRIDMARG_SOURCE_DIR) / "scenarios/tutorial/scenario.json");
        for (auto& gen : g.generators) gen.buildable = gen.retirable = false;
        cases.emplace_back("tutorial", g);
    }
    double worst = 0.0;
    std::string detail;
    for (const auto& [name, g] : cases) {
        const auto r = long_run_mer(g, ScaleEV{g.config.perturbation_fraction});
        const double sr = *r.sr_attributed / r.delta_demand_mwh;
        worst = std::max(worst, std::abs(r.lr_mer - sr));
        detail += name + " " + fmt(r.lr_mer, 6) + "; ";
    }
    return {worst <= 1e-6, detail + "max |LR - SR attributed| " + fmt(worst)};
}

Outcome c7_flex_monotonicity() {
    const double none = solve_expansion(test::solar_midday_toy()).total_cost;
    const double delay = solve_expansion(test::solar_midday_toy(0, 8)).total_cost;
    const double window = solve_expansion(test::solar_midday_toy(12, 12)).total_cost;
    const double ev = test::solar_midday_toy().flexible_loads[0].baseline_profile.sum();
    const double s1 = (none - delay) / ev, s2 = (delay - window) / ev;
    return {s1 >= 1.0 && s2 >= 1.0, "cost none " + fmt(none, 8) + " >= delay8 " + fmt(delay, 8) + " >= window24 " +
                                         fmt(window, 8) + "; savings " + fmt(s1) + " and " + fmt(s2) + " $/MWh of EV"};
}

Outcome c8_penalty_loop() {
    const GridModel g = test::storage_loop_toy();
    bool ok = true;
    std::string detail;
    for (auto method : {SrmeMethod::Uniform, SrmeMethod::Dual}) {
        const auto result = schedule_min_srme(g, CapacityDecisions::none(g), method);
        bool monotone = true;
        for (std::size_t k = 0; k < result.trace.records.size(); ++k) {
            const auto& r = result.trace.records[k];
            monotone = monotone && r.proxy_after <= r.proxy_before + 1e-9 * std::max(1.0, std::abs(r.proxy_before));
        }
        const double last_rel = result.trace.records.back().rel_change;
        ok = ok && result.trace.converged && result.trace.iterations_used <= 10 && last_rel < 0.01 && monotone;
        detail += std::string(to_string(method)) + ": " + std::to_string(result.trace.iterations_used) +
                  " iterations, last change " + fmt(last_rel) + ", proxy " + (monotone ? "non-increasing" : "ROSE") +
                  "; ";
    }
    return {ok, detail};
}

Outcome c9_backfire() {
    const GridModel g = test::solar_midday_toy(12, 12);
    const auto plan = solve_expansion(g);
    const auto cost = schedule_from(g, plan, ScheduleSource::CostMin);
    const auto srme1 = schedule_min_srme(g, plan.capacity, SrmeMethod::Uniform);
    const double c_cost = evaluate_fixed_schedule(g, cost).consequential_emissions();
    const double c_srme1 = evaluate_fixed_schedule(g, srme1.schedule).consequential_emissions();
    return {c_srme1 > c_cost, "consequential tCO2: SRME1-minimizing " + fmt(c_srme1, 6) + " > cost-minimizing " +
                                  fmt(c_cost, 6) + " (" + std::to_string(srme1.trace.iterations_used) + " iterations)"};
}

Outcome c10_schedule_invariants() {
    std::mt19937 rng(10);
    std::uniform_real_distribution<double> mw(0.0, 8.0), cap_scale(0.15, 3.0), price(0.0, 50.0);
    std::uniform_int_distribution<int> hours(2, 48), span(0, 14), kind(0, 2);
    int feasible = 0, rejected = 0, bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = hours(rng);
        Series req(h);
        for (int t = 0; t < h; ++t) req[t] = rng() % 2 ? mw(rng) : 0.0;
        if (req.sum() <= 0.0) req[h / 2] = 1.0;
        const int k = kind(rng);
        const FlexMode mode = k == 0 ? FlexMode::none() : k == 1 ? FlexMode::delay_only(span(rng))
                                                                 : FlexMode::window(span(rng), span(rng));
        const double cap = req.maxCoeff() * cap_scale(rng);
        const int adv = mode.kind == FlexMode::Kind::Window ? mode.advance : 0;
        const int del = mode.kind == FlexMode::Kind::NoFlex ? 0 : mode.delay;
        const std::vector<double> request(req.data(), req.data() + h);
        // With no flexibility the request is served as is, whatever the cap.
        const double oracle_cap = mode.kind == FlexMode::Kind::NoFlex ? 1e300 : cap;
        const auto witness = test::latest_schedule(test::window_bounds(request, adv, del), oracle_cap);

        FlexConstraintSet set;
        try {
            set = build_flex_constraints("x", req, cap, mode);
        } catch (const InfeasibleWindow&) {
            if (witness) ++bad;  // rejected a feasible window
            ++rejected;
            continue;
        }
        if (!witness) {  // accepted an infeasible window
            ++bad;
            continue;
        }
        lp::LpBuilder b;
        const auto vars = set.add_to(b);
        for (int t = 0; t < h; ++t) b.set_cost(vars.served[static_cast<std::size_t>(t)], price(rng));
        const auto s = lp::solve(b.build());
        if (s.status != lp::Status::Optimal) {
            ++bad;
            continue;
        }
        std::vector<double> served(static_cast<std::size_t>(h));
        for (int t = 0; t < h; ++t) served[static_cast<std::size_t>(t)] = s.x[vars.served[static_cast<std::size_t>(t)]];
        worst = std::max(worst, test::window_violation(request, adv, del, oracle_cap, served));
        ++feasible;
    }
    return {bad == 0 && worst <= 1e-7 && rejected > 0 && feasible > 0,
            std::to_string(feasible) + " solved, " + std::to_string(rejected) + " rejected, " + std::to_string(bad) +
                " misclassified; max violation " + fmt(worst)};
}

Outcome c11_icev() {
    const auto c = icev_comparison(0.17, 1.0, 3.0, 3.0);
    return {std::abs(c.pct_reduction - 0.83) <= 1e-12 && c.pct_reduction >= 0.67 && c.pct_reduction <= 0.86,
            "EV " + fmt(c.ev_tco2_per_vehicle) + " tCO2/yr vs ICEV 3.0: " + fmt(c.pct_reduction * 100.0, 4) +
                "% reduction"};
}

Outcome c12_determinism() {
    const fs::path dir = fs::temp_directory_path() / "gridmarg_acceptance_sweep";
    fs::remove_all(dir);
    const fs::path scenario = fs::path(GRIDMARG_SOURCE_DIR) / "scenarios/tutorial/scenario.json";
    const fs::path spec = fs::path(GRIDMARG_SOURCE_DIR) / "scenarios/tutorial/sweep.json";
    std::ostringstream out, err;
    const int a = cli::cmd_sweep({scenario, spec, 1, dir / "serial"}, out, err);
    const int b = cli::cmd_sweep({scenario, spec, 4, dir / "parallel"}, out, err);
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        return os.str();
    };
    const std::string serial = slurp(dir / "serial/sweep_results.csv");
    const std::string parallel = slurp(dir / "parallel/sweep_results.csv");
    const bool ok = a == 0 && b == 0 && !serial.empty() && serial == parallel;
    const auto lines = std::count(serial.begin(), serial.end(), '\n');
    fs::remove_all(dir);
    return {ok, std::to_string(lines) + " result lines, serial " + (ok ? "==" : "!=") + " --parallel 4"};
}

Outcome c3_proposition_one() {
    // Step-two solves from the checks above plus a few more shapes.
    const GridModel tutorial = load_scenario(fs::path(GRIDMARG_SOURCE_DIR) / "scenarios/tutorial/scenario.json");
    dual_rates(tutorial, solve_expansion(tutorial).capacity);
    const GridModel storage = test::storage_loop_toy();
    dual_rates(storage, CapacityDecisions::none(storage));
    const GridModel solar = test::solar_midday_toy(12, 12);
    dual_rates(solar, solve_expansion(solar).capacity);
    double worst = 0.0, min_lambda = std::numeric_limits<double>::infinity();
    for (const auto& s : g_dual_steps) {
        worst = std::max(worst, std::abs(s.step2_cost - s.base_cost) / std::max(1.0, std::abs(s.base_cost)));
        min_lambda = std::min(min_lambda, s.lambda);
    }
    return {worst <= 1e-6 && min_lambda >= 0.0, std::to_string(g_dual_steps.size()) +
                                                    " step-two solves, max relative |C - Cbar| " + fmt(worst) +
                                                    ", min lambda " + fmt(min_lambda)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
        double budget_s;
    };
    // Criterion 3 runs last: it audits the step-two solves of the others.
    const std::vector<Criterion> criteria = {
        {1, "LP solver validity", c1_lp_validity, 10.0},
        {2, "dual rate = finite difference", c2_dual_vs_finite_difference, 60.0},
        {4, "merit-order exactness", c4_merit_order, 0.0},
        {5, "long run below short run", c5_long_run_below_short_run, 0.0},
        {6, "frozen-structure equivalence", c6_frozen_structure, 0.0},
        {7, "flexibility monotonicity", c7_flex_monotonicity, 0.0},
        {8, "penalty-loop convergence", c8_penalty_loop, 0.0},
        {9, "emissions-signal backfire", c9_backfire, 300.0},
        {10, "schedule invariants", c10_schedule_invariants, 0.0},
        {11, "ICEV arithmetic", c11_icev, 0.0},
        {12, "sweep determinism", c12_determinism, 0.0},
        {3, "cost cap holds in step two", c3_proposition_one, 0.0},
    };
    std::vector<std::string> lines(13);
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0.0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += " (over the " + fmt(c.budget_s) + " s budget)";
        }
        failed += o.pass ? 0 : 1;
        char head[96];
        std::snprintf(head, sizeof head, "[%s] %2d %-32s %8.3f s  ", o.pass ? "PASS" : "FAIL", c.id, c.name, secs);
        lines[static_cast<std::size_t>(c.id)] = head + o.detail;
    }
    for (int i = 1; i <= 12; ++i) std::cout << lines[static_cast<std::size_t>(i)] << '\n';
    std::cout << (failed == 0 ? "all 12 criteria pass" : std::to_string(failed) + " criteria fail") << '\n';
    return failed == 0 ? 0 : 1;
}
