#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

#include "gridmarg/grid/scenario_io.hpp"
#include "gridmarg/lp/kkt.hpp"
#include "gridmarg/lp/simplex.hpp"
#include "gridmarg/planner/expansion.hpp"
#include "gridmarg/planner/export.hpp"
#include "support/toys.hpp"

using namespace gridmarg;
namespace fs = std::filesystem;

namespace {

const fs::path kTutorial = fs::path(GRIDMARG_SOURCE_DIR) / "scenarios" / "tutorial" / "scenario.json";

GridModel one_unit(double demand, double cap = 100.0) {
    GridModel g = test::single_zone(24, Series::Constant(24, demand));
    g.generators.push_back(test::thermal("g", "z", cap, 20.0, 0.9));
    return g;
}

DispatchResult solve_expansion(const GridModel& g) { return solve_model(build_expansion_lp(g)); }

DispatchResult solve_fixed(const GridModel& g, const CapacityDecisions& c) {
    return solve_model(build_operational_lp(g, c));
}

// Zone balance recomputed from decoded quantities: supply minus consumption.
Eigen::MatrixXd balance_residual(const GridModel& g, const DispatchResult& r) {
    const int h = g.horizon();
    Eigen::MatrixXd res = Eigen::MatrixXd::Zero(static_cast<Index>(g.zones.size()), h);
    for (std::size_t i = 0; i < g.generators.size(); ++i)
        res.row(g.zone_index(g.generators[i].zone_id)) += r.generation.row(static_cast<Index>(i));
    for (std::size_t k = 0; k < g.storage_units.size(); ++k)
        res.row(g.zone_index(g.storage_units[k].zone_id)) +=
            r.discharge.row(static_cast<Index>(k)) - r.charge.row(static_cast<Index>(k));
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        const auto& line = g.lines[l];
        for (int t = 0; t < h; ++t) {
            const double f = r.flow(static_cast<Index>(l), t);
            const double fwd = std::max(f, 0.0), rev = std::max(-f, 0.0);
            res(g.zone_index(line.from_zone), t) += -fwd + (1 - line.loss_fraction) * rev;
            res(g.zone_index(line.to_zone), t) += (1 - line.loss_fraction) * fwd - rev;
        }
    }
    res += r.non_served;
    for (std::size_t z = 0; z < g.zones.size(); ++z) res.row(static_cast<Index>(z)) -= g.zones[z].demand.transpose();
    for (std::size_t f = 0; f < g.flexible_loads.size(); ++f)
        res.row(g.zone_index(g.flexible_loads[f].zone_id)) -= r.flex_served.row(static_cast<Index>(f));
    return res;
}

GridModel random_grid(std::mt19937_64& rng, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridModel g;
    g.config.horizon_hours = h;
    const int nz = 1 + static_cast<int>(rng() % 3);
    for (int z = 0; z < nz; ++z) {
        const std::string id = "z" + std::to_string(z);
        Series d(h);
        for (int t = 0; t < h; ++t) d[t] = 40 + 40 * u(rng);
        g.zones.push_back(test::zone(id, d));
        g.generators.push_back(test::thermal("coal" + id, id, 60 + 60 * u(rng), 15 + 10 * u(rng), 0.9));
        g.generators.push_back(test::thermal("gas" + id, id, 40 * u(rng), 30 + 10 * u(rng), 0.4));
        Series cf(h);
        for (int t = 0; t < h; ++t) cf[t] = u(rng);
        g.generators.push_back(test::renewable("wind" + id, id, cf, 10 * u(rng), 100 + 300 * u(rng)));
        g.storage_units.push_back(test::battery("bat" + id, id, 10 * u(rng), 30 * u(rng), 0.9, 0.95));
        Series ev(h);
        for (int t = 0; t < h; ++t) ev[t] = 5 * u(rng);
        g.flexible_loads.push_back(test::ev_load("ev" + id, id, ev));
        g.flexible_loads.back().max_delay_hours = static_cast<int>(rng() % 4);
        if (z > 0) {
            TransmissionLine l;
            l.id = "l" + id;
            l.from_zone = "z0";
            l.to_zone = id;
            l.capacity_mw = 20 * u(rng);
            l.loss_fraction = 0.03;
            g.lines.push_back(l);
        }
    }
    return g;
}

}  // namespace

TEST_CASE("one generator serving flat demand") {
    const auto g = one_unit(50.0);
    const auto m = build_expansion_lp(g);
    CHECK(m.problem.num_eq() == 24);
    const auto r = solve_model(m);
    for (int t = 0; t < 24; ++t) {
        CHECK(r.generation(0, t) == doctest::Approx(50.0));
        CHECK(r.price(0, t) == doctest::Approx(20.0));
        CHECK(r.emissions(0, t) == doctest::Approx(45.0));
    }
    CHECK(r.total_cost == doctest::Approx(24 * 50 * 20.0));
    CHECK(r.total_emissions() == doctest::Approx(24 * 45.0));
}

TEST_CASE("shortfall is served at the penalty price") {
    const auto r = solve_expansion(one_unit(120.0));
    for (int t = 0; t < 24; ++t) {
        CHECK(r.non_served(0, t) == doctest::Approx(20.0));
        CHECK(r.price(0, t) == doctest::Approx(9000.0));
    }
    CHECK(r.total_served() == doctest::Approx(24 * 100.0));

    auto strict = one_unit(120.0);
    strict.config.nse_penalty.reset();
    CHECK_THROWS_AS(solve_expansion(strict), SolveFailed);
}

TEST_CASE("wind is built only when it pays for itself") {
    SUBCASE("expensive wind") {
        const auto r = solve_expansion(test::breakeven_toy(1e6));
        CHECK(r.capacity.generator_new[1] == doctest::Approx(0.0));
        CHECK(r.investment_cost == doctest::Approx(0.0));
    }
    SUBCASE("cheap wind") {
        const auto g = test::breakeven_toy(100.0);
        const auto r = solve_expansion(g);
        CHECK(r.capacity.generator_new[1] > 1.0);
        CHECK(r.investment_cost == doctest::Approx(100.0 * r.capacity.generator_new[1]));
        CHECK(lp::verify_kkt(build_expansion_lp(g).problem, r.solution).pass);

        // Re-solving operations on the chosen capacity reproduces the dispatch cost.
        const auto op = solve_fixed(g, r.capacity);
        CHECK(op.operational_cost == doctest::Approx(r.operational_cost).epsilon(1e-9));
        CHECK(op.total_emissions() == doctest::Approx(r.total_emissions()).epsilon(1e-9));

        // Pinning wind at zero leaves only coal.
        const auto bare = solve_fixed(g, CapacityDecisions::none(g));
        CHECK(bare.generation.row(1).sum() == doctest::Approx(0.0));
        CHECK(bare.total_emissions() > r.total_emissions());
    }
}

TEST_CASE("operational model needs every fixed capacity") {
    const auto g = test::breakeven_toy(100.0);
    CapacityDecisions c = CapacityDecisions::none(g);
    c.generator_new.resize(1);
    CHECK_THROWS_AS(build_operational_lp(g, c), MissingCapacity);
}

TEST_CASE("storage shifts cheap energy into the peak") {
    Series d(2);
    d << 50.0, 150.0;
    GridModel g = test::single_zone(2, d);
    g.generators.push_back(test::thermal("base", "z", 100.0, 10.0, 0.9));
    g.generators.push_back(test::thermal("peak", "z", 100.0, 50.0, 0.5));
    g.storage_units.push_back(test::battery("bat", "z", 50.0, 50.0));
    const auto r = solve_expansion(g);
    CHECK(r.charge(0, 0) == doctest::Approx(50.0));
    CHECK(r.discharge(0, 1) == doctest::Approx(50.0));
    CHECK(r.generation.row(1).sum() == doctest::Approx(0.0));
    CHECK(r.total_cost == doctest::Approx(2000.0));
}

TEST_CASE("commitment rows bound output between stable minimum and committed capacity") {
    GridModel g = one_unit(30.0);
    g.generators[0].min_stable_fraction = 0.5;
    g.generators[0].startup_cost = 5.0;
    const auto m = build_expansion_lp(g);
    const auto s = lp::solve(m.problem);
    REQUIRE(s.status == lp::Status::Optimal);
    for (int t = 0; t < 24; ++t) {
        const double gen = s.x[m.index.generation[0][static_cast<std::size_t>(t)]];
        const double on = s.x[m.index.commitment[0][static_cast<std::size_t>(t)]];
        CHECK(gen == doctest::Approx(30.0));
        CHECK(on >= gen - 1e-9);
        CHECK(0.5 * on <= gen + 1e-9);
        CHECK(on <= 100.0 + 1e-9);
    }
}

TEST_CASE("emissions cap dual matches a re-solve") {
    auto capped = [](double cap) {
        GridModel g = test::single_zone(24, Series::Constant(24, 100.0));
        g.generators.push_back(test::thermal("coal", "z", 200.0, 20.0, 0.9));
        g.generators.push_back(test::thermal("gas", "z", 200.0, 30.0, 0.4));
        g.config.co2_cap_tons = cap;
        return g;
    };
    const auto m = build_expansion_lp(capped(1800.0));
    const auto r = solve_model(m);
    CHECK(r.total_emissions() == doctest::Approx(1800.0));
    const double dual = r.solution.ineq_duals[m.index.co2_cap_row];
    CHECK(dual == doctest::Approx(20.0));
    const double up = solve_expansion(capped(1801.0)).total_cost;
    const double down = solve_expansion(capped(1799.0)).total_cost;
    CHECK(r.total_cost - up == doctest::Approx(dual));
    CHECK(down - r.total_cost == doctest::Approx(dual));
}

TEST_CASE("clean share floor forces clean output") {
    GridModel g = test::breakeven_toy(1e6);
    g.zones[0].clean_share_min = 0.2;
    const auto r = solve_expansion(g);
    const double consumption = g.zones[0].demand.sum() + g.flexible_loads[0].baseline_profile.sum();
    CHECK(r.generation.row(1).sum() >= 0.2 * consumption - 1e-6);
}

TEST_CASE("perturb_demand") {
    GridModel g = test::breakeven_toy(100.0);
    g.zones.push_back(test::flat_zone("y", 24, 10.0));

    SUBCASE("scale EV") {
        const auto out = perturb_demand(g, {}, ScaleEV{0.05});
        CHECK(out.flexible_loads[0].baseline_profile[5] == doctest::Approx(10.0 * 1.05));
        CHECK(same_series(out.zones[0].demand, g.zones[0].demand));
    }
    SUBCASE("uniform in a target zone") {
        const auto out = perturb_demand(g, {"y"}, UniformAll{0.1});
        CHECK(out.zones[1].demand[0] == doctest::Approx(11.0));
        CHECK(same_series(out.zones[0].demand, g.zones[0].demand));
    }
    SUBCASE("single hour") {
        const auto out = perturb_demand(g, {}, SingleHour{"z", 3, 1.0});
        CHECK(out.zones[0].demand[3] == doctest::Approx(101.0));
        CHECK(out.zones[0].demand.sum() == doctest::Approx(g.zones[0].demand.sum() + 1.0));
    }
    SUBCASE("unknown zone") {
        CHECK_THROWS_AS(perturb_demand(g, {"nowhere"}, UniformAll{0.1}), UnknownZone);
        CHECK_THROWS_AS(perturb_demand(g, {}, SingleHour{"nowhere", 0, 1.0}), UnknownZone);
    }
}

TEST_CASE("tutorial scenario reproduces the hand-derived plan") {
    const auto g = load_scenario(kTutorial);
    const auto m = build_expansion_lp(g);
    const auto r = solve_model(m);
    CHECK(r.capacity.generator_new[2] == doctest::Approx(60.0));
    CHECK(r.generation.row(0).sum() == doctest::Approx(2640.0));
    CHECK(r.generation.row(1).sum() == doctest::Approx(400.0));
    CHECK(r.generation.row(2).sum() == doctest::Approx(360.0));
    CHECK(r.total_cost == doctest::Approx(87600.0));
    CHECK(r.total_emissions() == doctest::Approx(2668.0));
    CHECK(r.total_served() == doctest::Approx(3400.0));
    CHECK(r.total_emissions() / r.total_served() == doctest::Approx(0.784706).epsilon(1e-6));
    CHECK(r.price(0, 2) == doctest::Approx(25.0));
    CHECK(r.price(1, 2) == doctest::Approx(30.0));

    SUBCASE("price equals the cost of one more MWh") {
        for (const auto& [zone, z] : {std::pair{std::string("north"), 0}, std::pair{std::string("south"), 1}}) {
            const auto bumped = perturb_demand(g, {}, SingleHour{zone, 2, 1.0});
            const double base = solve_fixed(g, r.capacity).total_cost;
            const double more = solve_fixed(bumped, r.capacity).total_cost;
            CHECK(more - base == doctest::Approx(r.price(z, 2)).epsilon(1e-4));
        }
    }
    SUBCASE("exports") {
        const fs::path dir = fs::temp_directory_path() / "gridmarg_test_tutorial_export";
        fs::remove_all(dir);
        fs::create_directories(dir);
        const auto files = write_dispatch_result(g, r, dir);
        CHECK(files.size() == 5);
        for (const auto& f : files) CHECK(fs::exists(dir / f));
        const auto summary = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
        CHECK(summary["total_cost"].get<double>() == doctest::Approx(87600.0));
        CHECK(summary["total_emissions_tco2"].get<double>() == doctest::Approx(2668.0));
        std::ifstream dispatch(dir / "dispatch.csv");
        std::string header;
        std::getline(dispatch, header);
        CHECK(header == "hour,zone,unit,generation_mw");
    }
}

TEST_CASE("random grids: energy balance, cyclic storage and KKT") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 15; ++trial) {
        const auto g = random_grid(rng, 12);
        const auto m = build_expansion_lp(g);
        const auto r = solve_model(m);
        CAPTURE(trial);
        CHECK(balance_residual(g, r).cwiseAbs().maxCoeff() < 1e-6);
        const auto report = lp::verify_kkt(m.problem, r.solution);
        CHECK(report.pass);
        for (std::size_t k = 0; k < g.storage_units.size(); ++k) {
            const auto& s = g.storage_units[k];
            const Index ki = static_cast<Index>(k);
            for (int t = 0; t < 12; ++t) {
                const double prev = r.soc(ki, (t + 11) % 12);
                const double expect = prev + s.charge_efficiency * r.charge(ki, t) -
                                      r.discharge(ki, t) / s.discharge_efficiency;
                CHECK(r.soc(ki, t) == doctest::Approx(expect).epsilon(1e-7));
            }
        }
        for (std::size_t f = 0; f < m.flex.size(); ++f)
            CHECK(m.flex[f].violation(r.flex_served.row(static_cast<Index>(f)).transpose()) < 1e-6);
        // Prices stay between zero and the shortfall penalty.
        CHECK(r.price.minCoeff() > -1e-6);
        CHECK(r.price.maxCoeff() < 9000.0 + 1e-6);
        // Fixing the chosen capacities cannot change the optimal operating cost.
        CHECK(solve_fixed(g, r.capacity).operational_cost == doctest::Approx(r.operational_cost).epsilon(1e-7));
    }
}

TEST_CASE("more buildable capacity cost never increases the built amount") {
    double last = std::numeric_limits<double>::infinity();
    for (double cost : {50.0, 100.0, 150.0, 200.0, 230.0, 300.0}) {
        const double built = solve_expansion(test::breakeven_toy(cost)).capacity.generator_new[1];
        CHECK(built <= last + 1e-6);
        last = built;
    }
}
