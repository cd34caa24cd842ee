#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gridmarg/errors.hpp"
#include "gridmarg/lp/problem.hpp"

namespace gridmarg::lp {

enum class Pricing { SteepestEdge, Dantzig, Bland };

template <typename Scalar>
struct SimplexOptions {
    Pricing pricing = Pricing::SteepestEdge;
    Scalar feasibility_tol = Scalar(1e-9);
    Scalar optimality_tol = Scalar(1e-7);
    Scalar pivot_tol = Scalar(1e-9);
    int max_iterations = 200000;
    int refactor_interval = 64;
    // Consecutive non-improving pivots before switching to Bland's rule.
    int stall_limit = 40;
    int max_restarts = 2;
    bool scale = true;
};

namespace detail {

// Bounded revised simplex on the computational form
//
//     [A  I  S] [x; s; a] = b,   l <= (x, s, a) <= u
//
// where s are row logicals (fixed at 0 for equalities, >= 0 for <= rows) and
// a are phase-one artificials with diagonal sign S. The basis inverse is kept
// explicitly and updated in product form, with periodic LU refactorization.
template <typename Scalar>
class RevisedSimplex {
public:
    using Problem = BasicLpProblem<Scalar>;
    using Solution = BasicLpSolution<Scalar>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using ColMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

    RevisedSimplex(const Problem& problem, const SimplexOptions<Scalar>& options)
        : problem_(problem), opt_(options) {}

    Solution solve() {
        problem_.validate();
        setup_scaled();
        Pricing pricing = opt_.pricing;
        for (int attempt = 0;; ++attempt) {
            try {
                return run(pricing);
            } catch (const SingularBasis&) {
                if (attempt >= opt_.max_restarts)
                    throw NumericalFailure("simplex basis became singular after " +
                                           std::to_string(attempt + 1) +
                                           " attempts; the instance likely needs rescaling");
                pricing = Pricing::Bland;
                opt_.refactor_interval = std::max(8, opt_.refactor_interval / 4);
            }
        }
    }

private:
    struct SingularBasis {};
    enum class PhaseResult { Optimal, Unbounded };
    static constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();

    const Problem& problem_;
    SimplexOptions<Scalar> opt_;

    Index n_ = 0, m_eq_ = 0, m_ = 0, total_ = 0;
    ColMatrix a_;  // scaled, rows [eq; le]
    Vector b_, row_scale_, col_scale_;
    Vector lo_, up_, cost2_, cost1_;
    std::vector<Scalar> art_sign_;

    std::vector<Index> head_;
    std::vector<Index> pos_;  // basis position or -1
    Vector x_;
    Matrix binv_;
    Vector weights_;
    int since_refactor_ = 0;
    int iterations_ = 0;
    bool bland_ = false;

    bool is_artificial(Index j) const { return j >= n_ + m_; }
    bool is_logical(Index j) const { return j >= n_ && j < n_ + m_; }

    template <typename F>
    void for_column(Index j, F&& f) const {
        if (j < n_) {
            for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) f(it.row(), it.value());
        } else if (j < n_ + m_) {
            f(j - n_, Scalar(1));
        } else {
            const Index i = j - n_ - m_;
            f(i, art_sign_[static_cast<std::size_t>(i)]);
        }
    }

    Scalar column_dot(Index j, const Vector& v) const {
        Scalar s = 0;
        for_column(j, [&](Index i, Scalar a) { s += a * v[i]; });
        return s;
    }

    Vector ftran(Index j) const {
        Vector w = Vector::Zero(m_);
        for_column(j, [&](Index i, Scalar a) { w.noalias() += a * binv_.col(i); });
        return w;
    }

    static Scalar pow2_round(Scalar s) {
        using std::exp2;
        using std::log2;
        using std::round;
        return exp2(round(log2(s)));
    }

    void setup_scaled() {
        n_ = problem_.num_variables();
        m_eq_ = problem_.num_eq();
        m_ = m_eq_ + problem_.num_ineq();
        total_ = n_ + 2 * m_;

        std::vector<Eigen::Triplet<Scalar, Index>> trips;
        trips.reserve(static_cast<std::size_t>(problem_.eq_matrix.nonZeros() + problem_.ineq_matrix.nonZeros()));
        auto append = [&](const typename Problem::SparseMatrix& mat, Index offset) {
            for (Index k = 0; k < mat.outerSize(); ++k)
                for (typename Problem::SparseMatrix::InnerIterator it(mat, k); it; ++it)
                    if (it.value() != Scalar(0)) trips.emplace_back(offset + it.row(), it.col(), it.value());
        };
        append(problem_.eq_matrix, 0);
        append(problem_.ineq_matrix, m_eq_);
        a_.resize(m_, n_);
        a_.setFromTriplets(trips.begin(), trips.end());
        a_.makeCompressed();

        b_.resize(m_);
        b_ << problem_.eq_rhs, problem_.ineq_rhs;
        row_scale_ = Vector::Ones(m_);
        col_scale_ = Vector::Ones(n_);

        if (opt_.scale && a_.nonZeros() > 0) {
            // Geometric equilibration, rounded to powers of two so scaling is exact.
            for (int pass = 0; pass < 6; ++pass) {
                Vector rmin = Vector::Constant(m_, kInf), rmax = Vector::Zero(m_);
                for (Index j = 0; j < n_; ++j)
                    for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) {
                        using std::abs;
                        const Scalar v = abs(it.value());
                        rmin[it.row()] = std::min(rmin[it.row()], v);
                        rmax[it.row()] = std::max(rmax[it.row()], v);
                    }
                Vector rs = Vector::Ones(m_);
                for (Index i = 0; i < m_; ++i)
                    if (rmax[i] > 0) {
                        using std::sqrt;
                        rs[i] = pow2_round(Scalar(1) / sqrt(rmin[i] * rmax[i]));
                    }
                for (Index j = 0; j < n_; ++j)
                    for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) it.valueRef() *= rs[it.row()];
                row_scale_.array() *= rs.array();

                Vector cs = Vector::Ones(n_);
                for (Index j = 0; j < n_; ++j) {
                    Scalar cmin = kInf, cmax = 0;
                    for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) {
                        using std::abs;
                        cmin = std::min(cmin, abs(it.value()));
                        cmax = std::max(cmax, abs(it.value()));
                    }
                    if (cmax > 0) {
                        using std::sqrt;
                        cs[j] = pow2_round(Scalar(1) / sqrt(cmin * cmax));
                    }
                }
                for (Index j = 0; j < n_; ++j)
                    for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) it.valueRef() *= cs[j];
                col_scale_.array() *= cs.array();
            }
            b_.array() *= row_scale_.array();
        }

        lo_.resize(total_);
        up_.resize(total_);
        cost2_ = Vector::Zero(total_);
        cost1_ = Vector::Zero(total_);
        for (Index j = 0; j < n_; ++j) {
            lo_[j] = problem_.lower[j] / col_scale_[j];
            up_[j] = problem_.upper[j] / col_scale_[j];
            cost2_[j] = problem_.objective[j] * col_scale_[j];
        }
        for (Index i = 0; i < m_; ++i) {
            lo_[n_ + i] = 0;
            up_[n_ + i] = i < m_eq_ ? Scalar(0) : kInf;
            lo_[n_ + m_ + i] = 0;
            up_[n_ + m_ + i] = kInf;
            cost1_[n_ + m_ + i] = 1;
        }
    }

    void initial_basis() {
        x_ = Vector::Zero(total_);
        head_.assign(static_cast<std::size_t>(m_), 0);
        pos_.assign(static_cast<std::size_t>(total_), -1);
        art_sign_.assign(static_cast<std::size_t>(m_), Scalar(1));
        for (Index j = 0; j < n_; ++j) {
            if (lo_[j] > -kInf)
                x_[j] = lo_[j];
            else if (up_[j] < kInf)
                x_[j] = up_[j];
            else
                x_[j] = 0;
        }
        Vector r = b_;
        for (Index j = 0; j < n_; ++j)
            if (x_[j] != Scalar(0))
                for (typename ColMatrix::InnerIterator it(a_, j); it; ++it) r[it.row()] -= it.value() * x_[j];

        binv_ = Matrix::Identity(m_, m_);
        for (Index i = 0; i < m_; ++i) {
            const Index logical = n_ + i;
            const bool fits = i < m_eq_ ? std::abs(r[i]) <= opt_.feasibility_tol : r[i] >= -opt_.feasibility_tol;
            if (fits) {
                head_[static_cast<std::size_t>(i)] = logical;
                pos_[static_cast<std::size_t>(logical)] = i;
                x_[logical] = r[i];
            } else {
                const Index art = n_ + m_ + i;
                const Scalar sign = r[i] >= 0 ? Scalar(1) : Scalar(-1);
                art_sign_[static_cast<std::size_t>(i)] = sign;
                head_[static_cast<std::size_t>(i)] = art;
                pos_[static_cast<std::size_t>(art)] = i;
                x_[art] = r[i] * sign;
                binv_(i, i) = sign;
            }
        }

        weights_.resize(total_);
        for (Index j = 0; j < total_; ++j) {
            Scalar s = 1;
            for_column(j, [&](Index, Scalar a) { s += a * a; });
            weights_[j] = s;
        }
        since_refactor_ = 0;
    }

    void refactor() {
        Matrix basis = Matrix::Zero(m_, m_);
        for (Index r = 0; r < m_; ++r)
            for_column(head_[static_cast<std::size_t>(r)], [&](Index i, Scalar a) { basis(i, r) = a; });
        if (m_ > 0) {
            Eigen::PartialPivLU<Matrix> lu(basis);
            using std::isfinite;
            const Scalar rc = lu.rcond();
            if (!(rc > Scalar(1e-13)) || !isfinite(rc)) throw SingularBasis{};
            binv_ = lu.inverse();
        }
        recompute_basics();
        since_refactor_ = 0;
    }

    void recompute_basics() {
        Vector r = b_;
        for (Index j = 0; j < total_; ++j) {
            if (pos_[static_cast<std::size_t>(j)] >= 0 || x_[j] == Scalar(0)) continue;
            const Scalar v = x_[j];
            for_column(j, [&](Index i, Scalar a) { r[i] -= a * v; });
        }
        const Vector xb = binv_ * r;
        for (Index k = 0; k < m_; ++k) x_[head_[static_cast<std::size_t>(k)]] = xb[k];
    }

    Vector duals(const Vector& cost) const {
        Vector cb(m_);
        for (Index k = 0; k < m_; ++k) cb[k] = cost[head_[static_cast<std::size_t>(k)]];
        return binv_.transpose() * cb;
    }

    Scalar phase_objective(const Vector& cost) const { return cost.dot(x_); }

    // Returns the entering variable (or -1) and its direction (+1 increase, -1 decrease).
    std::pair<Index, int> price(const Vector& cost, const Vector& y, bool phase_two) const {
        Index best = -1;
        int best_dir = 0;
        Scalar best_score = 0;
        for (Index j = 0; j < total_; ++j) {
            if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
            if (lo_[j] == up_[j]) continue;
            if (phase_two && is_artificial(j)) continue;
            const Scalar d = cost[j] - column_dot(j, y);
            int dir = 0;
            const bool can_up = x_[j] < up_[j];
            const bool can_down = x_[j] > lo_[j];
            if (d < -opt_.optimality_tol && can_up)
                dir = 1;
            else if (d > opt_.optimality_tol && can_down)
                dir = -1;
            if (dir == 0) continue;
            if (bland_ || opt_.pricing == Pricing::Bland) return {j, dir};
            Scalar score = d * d;
            if (opt_.pricing == Pricing::SteepestEdge) score /= weights_[j];
            if (score > best_score) {
                best_score = score;
                best = j;
                best_dir = dir;
            }
        }
        return {best, best_dir};
    }

    PhaseResult run_phase(const Vector& cost, bool phase_two) {
        Scalar last_obj = phase_objective(cost);
        int stall = 0;
        bland_ = false;
        for (;;) {
            if (iterations_ >= opt_.max_iterations)
                throw NumericalFailure("simplex iteration limit reached (" + std::to_string(iterations_) + ")");
            if (since_refactor_ >= opt_.refactor_interval) refactor();

            Vector y = duals(cost);
            auto [q, dir] = price(cost, y, phase_two);
            if (q < 0) {
                if (since_refactor_ == 0) return PhaseResult::Optimal;
                refactor();
                y = duals(cost);
                std::tie(q, dir) = price(cost, y, phase_two);
                if (q < 0) return PhaseResult::Optimal;
            }

            const Vector w = ftran(q);
            const Scalar sdir = Scalar(dir);

            // Harris two-pass ratio test.
            Scalar theta_max = kInf;
            for (Index r = 0; r < m_; ++r) {
                const Scalar delta = -sdir * w[r];
                const Index j = head_[static_cast<std::size_t>(r)];
                if (delta < -opt_.pivot_tol && lo_[j] > -kInf) {
                    const Scalar tol = bland_ ? Scalar(0) : opt_.feasibility_tol;
                    theta_max = std::min(theta_max, (x_[j] - lo_[j] + tol) / -delta);
                } else if (delta > opt_.pivot_tol && up_[j] < kInf) {
                    const Scalar tol = bland_ ? Scalar(0) : opt_.feasibility_tol;
                    theta_max = std::min(theta_max, (up_[j] - x_[j] + tol) / delta);
                }
            }
            const Scalar range = up_[q] - lo_[q];
            Index leave = -1;
            Scalar theta = 0;
            bool leave_to_upper = false;
            if (range < kInf && range <= theta_max) {
                theta = range;
            } else if (theta_max == kInf) {
                return PhaseResult::Unbounded;
            } else {
                Scalar best_pivot = -1;
                for (Index r = 0; r < m_; ++r) {
                    const Scalar delta = -sdir * w[r];
                    const Index j = head_[static_cast<std::size_t>(r)];
                    Scalar ratio;
                    bool to_upper;
                    if (delta < -opt_.pivot_tol && lo_[j] > -kInf) {
                        ratio = (x_[j] - lo_[j]) / -delta;
                        to_upper = false;
                    } else if (delta > opt_.pivot_tol && up_[j] < kInf) {
                        ratio = (up_[j] - x_[j]) / delta;
                        to_upper = true;
                    } else {
                        continue;
                    }
                    if (ratio > theta_max) continue;
                    using std::abs;
                    const Scalar mag = abs(delta);
                    bool take;
                    if (bland_) {
                        // Exact minimum ratio, ties broken by smallest variable index.
                        take = leave < 0 || ratio < theta ||
                               (ratio == theta && j < head_[static_cast<std::size_t>(leave)]);
                    } else {
                        take = mag > best_pivot;
                    }
                    if (take) {
                        best_pivot = mag;
                        leave = r;
                        theta = ratio;
                        leave_to_upper = to_upper;
                    }
                }
                if (leave < 0) return PhaseResult::Unbounded;
                theta = std::max(theta, Scalar(0));
            }

            // Primal update.
            x_[q] += sdir * theta;
            for (Index r = 0; r < m_; ++r) x_[head_[static_cast<std::size_t>(r)]] -= sdir * theta * w[r];
            ++iterations_;

            if (leave < 0) {
                x_[q] = dir > 0 ? up_[q] : lo_[q];
            } else {
                const Index p = head_[static_cast<std::size_t>(leave)];
                x_[p] = leave_to_upper ? up_[p] : lo_[p];
                update_weights(q, leave, w);
                pivot(q, leave, w);
            }

            const Scalar obj = phase_objective(cost);
            using std::abs;
            if (obj < last_obj - Scalar(1e-12) * std::max(Scalar(1), abs(last_obj))) {
                last_obj = obj;
                stall = 0;
                bland_ = false;
            } else if (++stall > opt_.stall_limit) {
                bland_ = true;
            }
        }
    }

    void update_weights(Index q, Index leave, const Vector& w) {
        if (opt_.pricing != Pricing::SteepestEdge) return;
        const Scalar alpha_rq = w[leave];
        const Scalar gamma_q = Scalar(1) + w.squaredNorm();
        const Vector rho = binv_.row(leave).transpose();
        const Vector tau = binv_.transpose() * w;
        for (Index j = 0; j < total_; ++j) {
            if (pos_[static_cast<std::size_t>(j)] >= 0 || j == q || lo_[j] == up_[j]) continue;
            const Scalar alpha_rj = column_dot(j, rho);
            if (alpha_rj == Scalar(0)) continue;
            const Scalar ratio = alpha_rj / alpha_rq;
            const Scalar updated = weights_[j] - Scalar(2) * ratio * column_dot(j, tau) + ratio * ratio * gamma_q;
            weights_[j] = std::max(updated, Scalar(1) + ratio * ratio);
        }
        const Index p = head_[static_cast<std::size_t>(leave)];
        weights_[p] = std::max(gamma_q / (alpha_rq * alpha_rq), Scalar(1));
    }

    void pivot(Index q, Index leave, const Vector& w) {
        const Scalar piv = w[leave];
        binv_.row(leave) /= piv;
        const auto pivot_row = binv_.row(leave).eval();
        for (Index r = 0; r < m_; ++r)
            if (r != leave && w[r] != Scalar(0)) binv_.row(r).noalias() -= w[r] * pivot_row;
        const Index p = head_[static_cast<std::size_t>(leave)];
        pos_[static_cast<std::size_t>(p)] = -1;
        head_[static_cast<std::size_t>(leave)] = q;
        pos_[static_cast<std::size_t>(q)] = leave;
        ++since_refactor_;
    }

    void drive_out_artificials() {
        bool changed = false;
        for (Index r = 0; r < m_; ++r) {
            if (!is_artificial(head_[static_cast<std::size_t>(r)])) continue;
            const Vector rho = binv_.row(r).transpose();
            Index best = -1;
            Scalar best_mag = Scalar(1e-7);
            for (Index j = 0; j < n_ + m_; ++j) {
                if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
                using std::abs;
                const Scalar mag = abs(column_dot(j, rho));
                if (mag > best_mag) {
                    best_mag = mag;
                    best = j;
                }
            }
            if (best < 0) continue;  // redundant row; the artificial stays basic at zero
            const Vector w = ftran(best);
            const Index art = head_[static_cast<std::size_t>(r)];
            x_[art] = 0;
            pivot(best, r, w);
            changed = true;
        }
        if (changed) refactor();
    }

    Solution run(Pricing pricing) {
        opt_.pricing = pricing;
        iterations_ = 0;
        initial_basis();

        bool needs_phase_one = false;
        for (Index r = 0; r < m_; ++r) needs_phase_one |= is_artificial(head_[static_cast<std::size_t>(r)]);

        Solution sol;
        if (needs_phase_one) {
            run_phase(cost1_, false);
            using std::abs;
            const Scalar infeas = phase_objective(cost1_);
            const Scalar scale = std::max(Scalar(1), b_.size() > 0 ? b_.cwiseAbs().maxCoeff() : Scalar(0));
            if (infeas > Scalar(1e-7) * scale) {
                sol.status = Status::Infeasible;
                sol.iterations = iterations_;
                return sol;
            }
        }
        for (Index i = 0; i < m_; ++i) {
            const Index art = n_ + m_ + i;
            up_[art] = 0;
            if (pos_[static_cast<std::size_t>(art)] < 0) x_[art] = 0;
        }
        if (needs_phase_one) drive_out_artificials();

        if (run_phase(cost2_, true) == PhaseResult::Unbounded) {
            sol.status = Status::Unbounded;
            sol.iterations = iterations_;
            return sol;
        }
        refactor();
        return extract();
    }

    Solution extract() const {
        Solution sol;
        sol.status = Status::Optimal;
        sol.iterations = iterations_;
        const Vector y = duals(cost2_);

        sol.x.resize(n_);
        sol.reduced_costs.resize(n_);
        sol.variable_status.resize(static_cast<std::size_t>(n_));
        sol.degenerate_basic.assign(static_cast<std::size_t>(n_), false);
        const Scalar tol = opt_.feasibility_tol;
        auto at_bound = [&](Index j) {
            using std::abs;
            return (lo_[j] > -kInf && abs(x_[j] - lo_[j]) <= tol) || (up_[j] < kInf && abs(up_[j] - x_[j]) <= tol);
        };
        for (Index j = 0; j < n_; ++j) {
            Scalar xj = x_[j];
            const bool basic = pos_[static_cast<std::size_t>(j)] >= 0;
            if (basic) {
                // Clip roundoff that leaves a basic value marginally outside its bounds.
                xj = std::clamp(xj, lo_[j], up_[j]);
                sol.variable_status[static_cast<std::size_t>(j)] = VarStatus::Basic;
                if (at_bound(j)) {
                    sol.degenerate_basic[static_cast<std::size_t>(j)] = true;
                    sol.primal_degenerate = true;
                }
            } else if (lo_[j] > -kInf && xj == lo_[j]) {
                sol.variable_status[static_cast<std::size_t>(j)] = VarStatus::AtLower;
            } else if (up_[j] < kInf && xj == up_[j]) {
                sol.variable_status[static_cast<std::size_t>(j)] = VarStatus::AtUpper;
            } else {
                sol.variable_status[static_cast<std::size_t>(j)] = VarStatus::Free;
            }
            sol.x[j] = xj * col_scale_[j];
            sol.reduced_costs[j] = (cost2_[j] - column_dot(j, y)) / col_scale_[j];
        }
        for (Index i = 0; i < m_; ++i) {
            const Index logical = n_ + i;
            if (pos_[static_cast<std::size_t>(logical)] >= 0 && i >= m_eq_ && at_bound(logical))
                sol.primal_degenerate = true;
        }
        // Snap structural values that are within roundoff of their original bounds.
        for (Index j = 0; j < n_; ++j) {
            if (problem_.lower[j] > -kInf && sol.x[j] < problem_.lower[j]) sol.x[j] = problem_.lower[j];
            if (problem_.upper[j] < kInf && sol.x[j] > problem_.upper[j]) sol.x[j] = problem_.upper[j];
        }
        const Vector y_orig = (y.array() * row_scale_.array()).matrix();
        sol.eq_duals = y_orig.head(m_eq_);
        sol.ineq_duals = -y_orig.tail(m_ - m_eq_);
        sol.objective_value = problem_.objective.dot(sol.x);
        return sol;
    }
};

}  // namespace detail

/// Solves `problem` with a bounded revised simplex method.
///
/// Duals are those of the final optimal basis. At a primal-degenerate optimum
/// they are one of several valid dual solutions; `primal_degenerate` and
/// `degenerate_basic` flag that case.
template <typename Scalar>
BasicLpSolution<Scalar> solve(const BasicLpProblem<Scalar>& problem,
                              const SimplexOptions<Scalar>& options = SimplexOptions<Scalar>{}) {
    return detail::RevisedSimplex<Scalar>(problem, options).solve();
}

}  // namespace gridmarg::lp
