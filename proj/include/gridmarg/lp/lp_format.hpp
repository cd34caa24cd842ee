#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "gridmarg/lp/problem.hpp"

namespace gridmarg::lp {

namespace detail {

template <typename Scalar>
std::string lp_number(Scalar v) {
    std::ostringstream os;
    os << std::setprecision(17) << static_cast<double>(v);
    return os.str();
}

template <typename Scalar, typename Row>
void write_lp_row(std::ostream& os, const Row& row) {
    bool first = true;
    for (typename Row::InnerIterator it(row, 0); it; ++it) {
        const double v = static_cast<double>(it.value());
        os << (v < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << lp_number(std::abs(v)) << " v" << it.col();
        first = false;
    }
    if (first) os << "0 v0";
}

}  // namespace detail

/// Writes `p` in a CPLEX-LP-like layout (Minimize / Subject To / Bounds / End)
/// with variables named v{index}. Output is deterministic for a given problem.
template <typename Scalar>
void write_lp(std::ostream& os, const BasicLpProblem<Scalar>& p) {
    constexpr Scalar inf = BasicLpProblem<Scalar>::infinity();
    os << "\\ gridmarg LP dump: " << p.num_variables() << " variables, " << p.num_eq() << " equalities, "
       << p.num_ineq() << " inequalities\n";
    os << "Minimize\n obj:";
    bool any = false;
    for (Index j = 0; j < p.num_variables(); ++j) {
        const double c = static_cast<double>(p.objective[j]);
        if (c == 0.0) continue;
        os << (c < 0 ? " - " : (any ? " + " : " ")) << detail::lp_number(std::abs(c)) << " v" << j;
        any = true;
    }
    if (!any) os << " 0 v0";
    os << "\nSubject To\n";
    for (Index i = 0; i < p.num_eq(); ++i) {
        os << " e" << i << ": ";
        detail::write_lp_row<Scalar>(os, p.eq_matrix.row(i));
        os << " = " << detail::lp_number(p.eq_rhs[i]) << "\n";
    }
    for (Index i = 0; i < p.num_ineq(); ++i) {
        os << " l" << i << ": ";
        detail::write_lp_row<Scalar>(os, p.ineq_matrix.row(i));
        os << " <= " << detail::lp_number(p.ineq_rhs[i]) << "\n";
    }
    os << "Bounds\n";
    for (Index j = 0; j < p.num_variables(); ++j) {
        const Scalar lo = p.lower[j], up = p.upper[j];
        if (lo == up) {
            os << " v" << j << " = " << detail::lp_number(lo) << "\n";
        } else if (lo == -inf && up == inf) {
            os << " v" << j << " free\n";
        } else {
            os << " " << (lo == -inf ? std::string("-inf") : detail::lp_number(lo)) << " <= v" << j
               << " <= " << (up == inf ? std::string("+inf") : detail::lp_number(up)) << "\n";
        }
    }
    os << "End\n";
}

}  // namespace gridmarg::lp
