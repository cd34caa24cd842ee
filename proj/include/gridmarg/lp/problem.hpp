#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gridmarg/errors.hpp"

namespace gridmarg::lp {

using Index = Eigen::Index;

/// Linear program in the form
///
///     minimize    c'x
///     subject to  A_eq x  = b_eq
///                 A_le x <= b_le
///                 lower <= x <= upper
///
/// Immutable after construction by convention; solvers only read it.
template <typename Scalar>
struct BasicLpProblem {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

    Vector objective;
    SparseMatrix eq_matrix;
    Vector eq_rhs;
    SparseMatrix ineq_matrix;
    Vector ineq_rhs;
    Vector lower;
    Vector upper;

    Index num_variables() const { return objective.size(); }
    Index num_eq() const { return eq_rhs.size(); }
    Index num_ineq() const { return ineq_rhs.size(); }

    static constexpr Scalar infinity() { return std::numeric_limits<Scalar>::infinity(); }

    /// Throws DimensionMismatch or ValidationError when the problem is malformed.
    void validate() const {
        const Index n = num_variables();
        if (lower.size() != n || upper.size() != n)
            throw DimensionMismatch("bound vectors do not match the number of variables");
        if (eq_matrix.rows() != eq_rhs.size() || ineq_matrix.rows() != ineq_rhs.size())
            throw DimensionMismatch("constraint rows do not match right-hand sides");
        if ((eq_matrix.rows() > 0 && eq_matrix.cols() != n) ||
            (ineq_matrix.rows() > 0 && ineq_matrix.cols() != n))
            throw DimensionMismatch("constraint matrix references undeclared variables");
        for (Index j = 0; j < n; ++j) {
            using std::isfinite;
            if (!isfinite(objective[j]))
                throw ValidationError("objective coefficient of v" + std::to_string(j) + " is not finite");
            if (lower[j] > upper[j])
                throw ValidationError("lower bound exceeds upper bound for v" + std::to_string(j));
            if (lower[j] == infinity() || upper[j] == -infinity())
                throw ValidationError("empty bound interval for v" + std::to_string(j));
        }
        auto check_finite = [](const SparseMatrix& m, const Vector& rhs, const char* what) {
            using std::isfinite;
            for (Index k = 0; k < m.outerSize(); ++k)
                for (typename SparseMatrix::InnerIterator it(m, k); it; ++it)
                    if (!isfinite(it.value()))
                        throw ValidationError(std::string(what) + " row " + std::to_string(k) +
                                              " has a non-finite coefficient");
            for (Index i = 0; i < rhs.size(); ++i)
                if (!isfinite(rhs[i]))
                    throw ValidationError(std::string(what) + " row " + std::to_string(i) +
                                          " has a non-finite right-hand side");
        };
        check_finite(eq_matrix, eq_rhs, "equality");
        check_finite(ineq_matrix, ineq_rhs, "inequality");
    }
};

enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "Optimal";
        case Status::Infeasible: return "Infeasible";
        case Status::Unbounded: return "Unbounded";
    }
    return "?";
}

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper, Free };

/// Primal/dual solution.
///
/// Sign convention: eq_duals[i] is d(objective)/d(eq_rhs[i]). ineq_duals are
/// nonnegative multipliers of the <= rows, entering the Lagrangian as
/// c'x - mu'(A_eq x - b_eq) + gamma'(A_le x - b_le), so that
/// d(objective)/d(ineq_rhs[i]) = -ineq_duals[i].
/// reduced_costs = c - A_eq' mu + A_le' gamma.
template <typename Scalar>
struct BasicLpSolution {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Status status = Status::Infeasible;
    Vector x;
    Scalar objective_value = 0;
    Vector eq_duals;
    Vector ineq_duals;
    Vector reduced_costs;

    std::vector<VarStatus> variable_status;
    // True when some basic variable (structural or row slack) sits on a bound,
    // i.e. the final basis is primal degenerate and duals may not be unique.
    std::vector<bool> degenerate_basic;  // per structural variable
    bool primal_degenerate = false;
    int iterations = 0;
};

/// Incremental row/column assembly for BasicLpProblem.
template <typename Scalar>
class BasicLpBuilder {
public:
    using Problem = BasicLpProblem<Scalar>;
    using Term = std::pair<Index, Scalar>;

    Index add_variable(Scalar cost, Scalar lower = 0, Scalar upper = Problem::infinity()) {
        cost_.push_back(cost);
        lower_.push_back(lower);
        upper_.push_back(upper);
        return static_cast<Index>(cost_.size()) - 1;
    }

    Index num_variables() const { return static_cast<Index>(cost_.size()); }

    void set_cost(Index var, Scalar cost) { cost_.at(static_cast<std::size_t>(var)) = cost; }
    void add_cost(Index var, Scalar delta) { cost_.at(static_cast<std::size_t>(var)) += delta; }
    Scalar cost(Index var) const { return cost_.at(static_cast<std::size_t>(var)); }

    void set_bounds(Index var, Scalar lower, Scalar upper) {
        lower_.at(static_cast<std::size_t>(var)) = lower;
        upper_.at(static_cast<std::size_t>(var)) = upper;
    }
    Scalar lower(Index var) const { return lower_.at(static_cast<std::size_t>(var)); }
    Scalar upper(Index var) const { return upper_.at(static_cast<std::size_t>(var)); }

    Index add_eq(const std::vector<Term>& terms, Scalar rhs) {
        for (const auto& [j, v] : terms) eq_.emplace_back(eq_rhs_.size(), j, v);
        eq_rhs_.push_back(rhs);
        return static_cast<Index>(eq_rhs_.size()) - 1;
    }

    Index add_le(const std::vector<Term>& terms, Scalar rhs) {
        for (const auto& [j, v] : terms) le_.emplace_back(le_rhs_.size(), j, v);
        le_rhs_.push_back(rhs);
        return static_cast<Index>(le_rhs_.size()) - 1;
    }

    Index add_ge(const std::vector<Term>& terms, Scalar rhs) {
        std::vector<Term> negated;
        negated.reserve(terms.size());
        for (const auto& [j, v] : terms) negated.emplace_back(j, -v);
        return add_le(negated, -rhs);
    }

    Index num_eq() const { return static_cast<Index>(eq_rhs_.size()); }
    Index num_le() const { return static_cast<Index>(le_rhs_.size()); }

    Problem build() const {
        Problem p;
        const Index n = num_variables();
        p.objective = Eigen::Map<const typename Problem::Vector>(cost_.data(), n);
        p.lower = Eigen::Map<const typename Problem::Vector>(lower_.data(), n);
        p.upper = Eigen::Map<const typename Problem::Vector>(upper_.data(), n);
        p.eq_rhs = Eigen::Map<const typename Problem::Vector>(eq_rhs_.data(), num_eq());
        p.ineq_rhs = Eigen::Map<const typename Problem::Vector>(le_rhs_.data(), num_le());
        for (const auto& t : eq_)
            if (t.col() < 0 || t.col() >= n)
                throw DimensionMismatch("equality row " + std::to_string(t.row()) + " references undeclared v" +
                                        std::to_string(t.col()));
        for (const auto& t : le_)
            if (t.col() < 0 || t.col() >= n)
                throw DimensionMismatch("inequality row " + std::to_string(t.row()) +
                                        " references undeclared v" + std::to_string(t.col()));
        p.eq_matrix.resize(num_eq(), n);
        p.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
        p.ineq_matrix.resize(num_le(), n);
        p.ineq_matrix.setFromTriplets(le_.begin(), le_.end());
        p.validate();
        return p;
    }

private:
    std::vector<Scalar> cost_, lower_, upper_, eq_rhs_, le_rhs_;
    std::vector<Eigen::Triplet<Scalar, Index>> eq_, le_;
};

using LpProblem = BasicLpProblem<double>;
using LpSolution = BasicLpSolution<double>;
using LpBuilder = BasicLpBuilder<double>;

}  // namespace gridmarg::lp
