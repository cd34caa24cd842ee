#pragma once

#include <algorithm>
#include <cmath>

#include "gridmarg/lp/problem.hpp"

namespace gridmarg::lp {

/// Optimality residuals of a primal/dual pair, recomputed from the problem data.
/// Row residuals are relative to max(1, |rhs|); the gap is reported both
/// absolute and relative to max(1, |c'x|).
template <typename Scalar>
struct BasicResidualReport {
    Scalar primal_infeasibility = 0;
    Scalar dual_infeasibility = 0;
    Scalar complementarity = 0;
    Scalar duality_gap = 0;
    Scalar relative_gap = 0;
    Scalar primal_objective = 0;
    Scalar dual_objective = 0;
    bool pass = false;
};

using ResidualReport = BasicResidualReport<double>;

template <typename Scalar>
BasicResidualReport<Scalar> verify_kkt(const BasicLpProblem<Scalar>& p, const BasicLpSolution<Scalar>& s,
                                       Scalar tolerance = Scalar(1e-6)) {
    using std::abs;
    using std::max;
    using Vector = typename BasicLpProblem<Scalar>::Vector;
    constexpr Scalar inf = BasicLpProblem<Scalar>::infinity();
    BasicResidualReport<Scalar> rep;

    const Vector ax_eq = p.eq_matrix * s.x;
    const Vector ax_le = p.ineq_matrix * s.x;
    for (Index i = 0; i < p.num_eq(); ++i)
        rep.primal_infeasibility =
            max(rep.primal_infeasibility, abs(ax_eq[i] - p.eq_rhs[i]) / max(Scalar(1), abs(p.eq_rhs[i])));
    for (Index i = 0; i < p.num_ineq(); ++i)
        rep.primal_infeasibility =
            max(rep.primal_infeasibility, max(Scalar(0), ax_le[i] - p.ineq_rhs[i]) / max(Scalar(1), abs(p.ineq_rhs[i])));
    for (Index j = 0; j < p.num_variables(); ++j) {
        rep.primal_infeasibility = max(rep.primal_infeasibility, max(Scalar(0), p.lower[j] - s.x[j]));
        rep.primal_infeasibility = max(rep.primal_infeasibility, max(Scalar(0), s.x[j] - p.upper[j]));
    }

    // d = c - A_eq' mu + A_le' gamma
    const Vector d = p.objective - p.eq_matrix.transpose() * s.eq_duals + p.ineq_matrix.transpose() * s.ineq_duals;

    for (Index i = 0; i < p.num_ineq(); ++i) {
        rep.dual_infeasibility = max(rep.dual_infeasibility, max(Scalar(0), -s.ineq_duals[i]));
        const Scalar slack = p.ineq_rhs[i] - ax_le[i];
        rep.complementarity =
            max(rep.complementarity, abs(s.ineq_duals[i] * slack) / max(Scalar(1), abs(p.ineq_rhs[i])));
    }

    Scalar bound_terms = 0;
    for (Index j = 0; j < p.num_variables(); ++j) {
        const Scalar lo = p.lower[j], up = p.upper[j], xj = s.x[j], dj = d[j];
        const Scalar scale = max(Scalar(1), abs(xj));
        const bool at_lo = lo > -inf && abs(xj - lo) <= tolerance * max(Scalar(1), abs(lo));
        const bool at_up = up < inf && abs(up - xj) <= tolerance * max(Scalar(1), abs(up));
        if (at_lo && at_up) {
            // fixed variable: any reduced cost is dual feasible
        } else if (at_lo) {
            rep.dual_infeasibility = max(rep.dual_infeasibility, max(Scalar(0), -dj));
        } else if (at_up) {
            rep.dual_infeasibility = max(rep.dual_infeasibility, max(Scalar(0), dj));
        } else {
            rep.dual_infeasibility = max(rep.dual_infeasibility, abs(dj));
        }
        if (dj > 0) {
            const Scalar anchor = lo > -inf ? lo : xj;
            bound_terms += dj * anchor;
            rep.complementarity = max(rep.complementarity, abs(dj * (xj - anchor)) / scale);
        } else if (dj < 0) {
            const Scalar anchor = up < inf ? up : xj;
            bound_terms += dj * anchor;
            rep.complementarity = max(rep.complementarity, abs(dj * (anchor - xj)) / scale);
        }
    }

    rep.primal_objective = p.objective.dot(s.x);
    rep.dual_objective = p.eq_rhs.dot(s.eq_duals) - p.ineq_rhs.dot(s.ineq_duals) + bound_terms;
    rep.duality_gap = abs(rep.primal_objective - rep.dual_objective);
    rep.relative_gap = rep.duality_gap / max(Scalar(1), abs(rep.primal_objective));
    rep.pass = rep.primal_infeasibility <= tolerance && rep.dual_infeasibility <= tolerance &&
               rep.complementarity <= tolerance && rep.relative_gap <= tolerance;
    return rep;
}

}  // namespace gridmarg::lp
