#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "paretopool/error.hpp"

namespace paretopool::lp {

// ============================================================================
// Dense bounded-variable primal simplex
//
//   maximize    c . x
//   subject to  a_r . x  (<= | = | >=)  b_r
//               0 <= x_j <= u_j      (u_j may be +inf)
//
// Two phases with artificial variables. Entering columns follow Dantzig's rule
// (lowest index on ties) and switch permanently to Bland's rule after a run of
// degenerate pivots, so the returned vertex is a deterministic function of the
// input.
// ============================================================================

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
    std::size_t column;
    double coefficient;
};

struct Constraint {
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

class Problem {
public:
    std::size_t add_variable(double objective, double upper = kInfinity) {
        if (!(upper >= 0.0)) throw DomainError("variable upper bound must be non-negative");
        objective_.push_back(objective);
        upper_.push_back(upper);
        return objective_.size() - 1;
    }

    void add_constraint(std::vector<Term> terms, Relation relation, double rhs) {
        for (const auto& t : terms)
            if (t.column >= objective_.size()) throw DomainError("constraint references an unknown variable");
        rows_.push_back({std::move(terms), relation, rhs});
    }

    std::size_t variable_count() const noexcept { return objective_.size(); }
    std::size_t constraint_count() const noexcept { return rows_.size(); }
    const std::vector<double>& objective() const noexcept { return objective_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    const std::vector<Constraint>& constraints() const noexcept { return rows_; }

private:
    std::vector<double> objective_;
    std::vector<double> upper_;
    std::vector<Constraint> rows_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

struct Options {
    double pivot_tolerance = 1e-11;
    double cost_tolerance = 1e-11;
    double feasibility_tolerance = 1e-9;
    std::size_t max_iterations = 1'000'000;
    std::size_t degenerate_run_before_bland = 64;
};

namespace detail {

class Tableau {
public:
    enum class Position : unsigned char { Basic, Lower, Upper };

    Tableau(const Problem& p, const Options& opt) : opt_(opt) {
        const auto& rows = p.constraints();
        m_ = rows.size();
        structural_ = p.variable_count();

        // Normalize to non-negative right-hand sides.
        std::vector<Relation> rel(m_);
        std::vector<double> sign(m_, 1.0);
        for (std::size_t r = 0; r < m_; ++r) {
            rel[r] = rows[r].relation;
            if (rows[r].rhs < 0.0) {
                sign[r] = -1.0;
                if (rel[r] == Relation::LessEqual)
                    rel[r] = Relation::GreaterEqual;
                else if (rel[r] == Relation::GreaterEqual)
                    rel[r] = Relation::LessEqual;
            }
        }

        std::vector<std::size_t> slack_col(m_, npos), art_col(m_, npos);
        std::size_t cols = structural_;
        for (std::size_t r = 0; r < m_; ++r)
            if (rel[r] != Relation::Equal) slack_col[r] = cols++;
        first_artificial_ = cols;
        for (std::size_t r = 0; r < m_; ++r)
            if (rel[r] != Relation::LessEqual) art_col[r] = cols++;
        n_ = cols;

        tab_.assign(m_ * n_, 0.0);
        upper_.assign(n_, kInfinity);
        cost_.assign(n_, 0.0);
        for (std::size_t j = 0; j < structural_; ++j) {
            upper_[j] = p.upper()[j];
            cost_[j] = p.objective()[j];
        }
        position_.assign(n_, Position::Lower);
        basis_.assign(m_, npos);
        beta_.assign(m_, 0.0);

        for (std::size_t r = 0; r < m_; ++r) {
            for (const auto& t : rows[r].terms) at(r, t.column) += sign[r] * t.coefficient;
            beta_[r] = sign[r] * rows[r].rhs;
            if (slack_col[r] != npos) at(r, slack_col[r]) = rel[r] == Relation::LessEqual ? 1.0 : -1.0;
            if (art_col[r] != npos) {
                at(r, art_col[r]) = 1.0;
                basis_[r] = art_col[r];
            } else {
                basis_[r] = slack_col[r];
            }
            position_[basis_[r]] = Position::Basic;
        }
    }

    Solution run() {
        Solution sol;
        if (first_artificial_ < n_) {
            std::vector<double> phase1(n_, 0.0);
            for (std::size_t j = first_artificial_; j < n_; ++j) phase1[j] = -1.0;
            const Status s = optimize(phase1, sol.iterations);
            if (s == Status::IterationLimit) {
                sol.status = s;
                return sol;
            }
            double infeasibility = 0.0;
            for (std::size_t r = 0; r < m_; ++r)
                if (basis_[r] >= first_artificial_) infeasibility += beta_[r];
            double scale = 1.0;
            for (double b : beta_) scale = std::max(scale, std::abs(b));
            if (infeasibility > opt_.feasibility_tolerance * scale) {
                sol.status = Status::Infeasible;
                return sol;
            }
            // Artificials are pinned to zero from here on.
            for (std::size_t j = first_artificial_; j < n_; ++j) upper_[j] = 0.0;
        }
        const Status s = optimize(cost_, sol.iterations);
        sol.status = s;
        if (s != Status::Optimal) return sol;

        sol.x.assign(structural_, 0.0);
        for (std::size_t j = 0; j < structural_; ++j)
            if (position_[j] == Position::Upper) sol.x[j] = upper_[j];
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] < structural_) sol.x[basis_[r]] = std::clamp(beta_[r], 0.0, upper_[basis_[r]]);
        for (std::size_t j = 0; j < structural_; ++j) sol.objective += cost_[j] * sol.x[j];
        return sol;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    double& at(std::size_t r, std::size_t c) { return tab_[r * n_ + c]; }
    double at(std::size_t r, std::size_t c) const { return tab_[r * n_ + c]; }

    Status optimize(const std::vector<double>& cost, std::size_t& iterations) {
        std::vector<double> reduced(cost);
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost[basis_[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < n_; ++j) reduced[j] -= cb * at(r, j);
        }
        for (std::size_t r = 0; r < m_; ++r) reduced[basis_[r]] = 0.0;

        bool bland = false;
        std::size_t degenerate_run = 0;
        while (true) {
            if (iterations >= opt_.max_iterations) return Status::IterationLimit;

            std::size_t q = npos;
            double best = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (position_[j] == Position::Basic || upper_[j] == 0.0) continue;
                const double d = reduced[j];
                const bool eligible = (position_[j] == Position::Lower && d > opt_.cost_tolerance) ||
                                      (position_[j] == Position::Upper && d < -opt_.cost_tolerance);
                if (!eligible) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    q = j;
                }
            }
            if (q == npos) return Status::Optimal;
            ++iterations;

            const double dir = position_[q] == Position::Lower ? 1.0 : -1.0;
            double theta = upper_[q];
            std::size_t leave = npos;
            bool leave_to_upper = false;
            for (std::size_t r = 0; r < m_; ++r) {
                const double rate = -dir * at(r, q);
                double limit;
                bool to_upper;
                if (rate < -opt_.pivot_tolerance) {
                    limit = std::max(beta_[r], 0.0) / -rate;
                    to_upper = false;
                } else if (rate > opt_.pivot_tolerance && upper_[basis_[r]] < kInfinity) {
                    limit = std::max(upper_[basis_[r]] - beta_[r], 0.0) / rate;
                    to_upper = true;
                } else {
                    continue;
                }
                const bool better = leave == npos
                                        ? limit < theta
                                        : limit < theta - 1e-14 || (limit <= theta + 1e-14 && basis_[r] < basis_[leave]);
                if (better) {
                    theta = limit;
                    leave = r;
                    leave_to_upper = to_upper;
                }
            }
            if (theta == kInfinity) return Status::Unbounded;

            if (theta <= 1e-13) {
                if (++degenerate_run > opt_.degenerate_run_before_bland) bland = true;
            } else {
                degenerate_run = 0;
            }

            for (std::size_t r = 0; r < m_; ++r) beta_[r] += -dir * at(r, q) * theta;

            if (leave == npos) {
                position_[q] = position_[q] == Position::Lower ? Position::Upper : Position::Lower;
                continue;
            }

            const double entering_value = position_[q] == Position::Lower ? theta : upper_[q] - theta;
            const std::size_t out = basis_[leave];
            position_[out] = leave_to_upper ? Position::Upper : Position::Lower;
            pivot(leave, q, reduced);
            basis_[leave] = q;
            position_[q] = Position::Basic;
            beta_[leave] = entering_value;
        }
    }

    void pivot(std::size_t row, std::size_t col, std::vector<double>& reduced) {
        double* prow = &tab_[row * n_];
        const double inv = 1.0 / prow[col];
        for (std::size_t j = 0; j < n_; ++j) prow[j] *= inv;
        prow[col] = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == row) continue;
            double* cur = &tab_[r * n_];
            const double f = cur[col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n_; ++j)
                if (prow[j] != 0.0) cur[j] -= f * prow[j];
            cur[col] = 0.0;
        }
        const double f = reduced[col];
        if (f != 0.0) {
            for (std::size_t j = 0; j < n_; ++j)
                if (prow[j] != 0.0) reduced[j] -= f * prow[j];
            reduced[col] = 0.0;
        }
    }

    Options opt_;
    std::size_t m_ = 0, n_ = 0, structural_ = 0, first_artificial_ = 0;
    std::vector<double> tab_;
    std::vector<double> upper_;
    std::vector<double> cost_;
    std::vector<Position> position_;
    std::vector<std::size_t> basis_;
    std::vector<double> beta_;
};

}  // namespace detail

inline Solution solve(const Problem& problem, const Options& options = {}) {
    detail::Tableau t(problem, options);
    return t.run();
}

}  // namespace paretopool::lp
