#pragma once

#include <random>

#include "gridmarg/lp/problem.hpp"

namespace gridmarg::test {

struct RandomLpShape {
    int variables = 6;
    int equalities = 1;
    int inequalities = 4;
    bool finite_upper = true;
    double density = 0.7;
};

// Feasible by construction: rows are generated around an interior point x0.
// With finite upper bounds the instance is also bounded.
inline lp::LpProblem random_feasible_lp(std::mt19937_64& rng, const RandomLpShape& shape) {
    std::uniform_real_distribution<double> coef(-5.0, 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> ub(2.0, 10.0);
    lp::LpBuilder b;
    std::vector<double> x0;
    for (int j = 0; j < shape.variables; ++j) {
        const double upper = shape.finite_upper || unit(rng) < 0.5 ? ub(rng) : lp::LpProblem::infinity();
        const double cost = shape.finite_upper ? coef(rng) : std::abs(coef(rng)) + 0.1;
        b.add_variable(cost, 0.0, upper);
        const double cap = std::isfinite(upper) ? upper : 5.0;
        x0.push_back(cap * (0.2 + 0.6 * unit(rng)));
    }
    auto random_row = [&] {
        std::vector<lp::LpBuilder::Term> terms;
        for (int j = 0; j < shape.variables; ++j)
            if (unit(rng) < shape.density) terms.emplace_back(j, coef(rng));
        if (terms.empty()) terms.emplace_back(static_cast<int>(unit(rng) * shape.variables), 1.0);
        double ax = 0;
        for (const auto& [j, v] : terms) ax += v * x0[static_cast<std::size_t>(j)];
        return std::pair{terms, ax};
    };
    for (int i = 0; i < shape.equalities; ++i) {
        auto [terms, ax] = random_row();
        b.add_eq(terms, ax);
    }
    for (int i = 0; i < shape.inequalities; ++i) {
        auto [terms, ax] = random_row();
        b.add_le(terms, ax + 3.0 * unit(rng));
    }
    return b.build();
}

}  // namespace gridmarg::test
