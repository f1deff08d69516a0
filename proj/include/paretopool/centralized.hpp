#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paretopool/distortion.hpp"
#include "paretopool/error.hpp"
#include "paretopool/riskmeasure.hpp"
#include "paretopool/simplex.hpp"

namespace paretopool {

// ============================================================================
// Centralized market with an Expected Shortfall insurer
// ============================================================================

/// A policyholder evaluates risk with a single distortion of the reference measure.
struct PolicyHolder {
    Distortion distortion;
    LossProfile endowment;
};

namespace detail {

/// Layers of one endowment: breakpoints 0 and the distinct values of X.
struct EndowmentLayers {
    std::vector<double> breakpoints;
    std::vector<double> reference_survival;  // P(X > b_k)
    std::vector<double> distorted_survival;  // T(P(X > b_k))

    std::size_t layer_count() const noexcept { return breakpoints.size() - 1; }
    double length(std::size_t k) const { return breakpoints[k + 1] - breakpoints[k]; }
};

inline EndowmentLayers endowment_layers(const EmpiricalSpace& reference, const PolicyHolder& holder) {
    const auto& x = holder.endowment;
    check_lengths(reference, x);
    if (!x.non_negative()) throw DomainError("endowments must be non-negative");
    EndowmentLayers out;
    out.breakpoints.assign(x.values().begin(), x.values().end());
    out.breakpoints.push_back(0.0);
    std::sort(out.breakpoints.begin(), out.breakpoints.end());
    out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()), out.breakpoints.end());
    for (std::size_t k = 0; k + 1 < out.breakpoints.size(); ++k) {
        const double p = survival(reference, x, out.breakpoints[k]);
        out.reference_survival.push_back(p);
        out.distorted_survival.push_back(holder.distortion(p));
    }
    return out;
}

inline void check_holders(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders) {
    if (holders.empty()) throw DomainError("centralized market needs at least one policyholder");
    for (const auto& h : holders) check_lengths(reference, h.endowment);
}

inline double money_scale(std::span<const PolicyHolder> holders) {
    double m = 0.0;
    for (const auto& h : holders) m = std::max(m, h.endowment.max());
    return m > 0.0 ? m : 1.0;
}

}  // namespace detail

/// sum_i sum_layers length * min{Q(X_i > t), nu_i(X_i > t)} for a measure q on the states.
inline double measure_objective(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                std::span<const double> q) {
    detail::check_holders(reference, holders);
    if (q.size() != reference.size()) throw LengthMismatchError("measure and reference space differ in length");
    double total = 0.0;
    for (const auto& h : holders) {
        const auto layers = detail::endowment_layers(reference, h);
        for (std::size_t k = 0; k < layers.layer_count(); ++k) {
            double qk = 0.0;
            for (std::size_t w = 0; w < q.size(); ++w)
                if (h.endowment[w] > layers.breakpoints[k]) qk += q[w];
            total += layers.length(k) * std::min(qk, layers.distorted_survival[k]);
        }
    }
    return total;
}

struct MeasureSolution {
    std::vector<double> measure;  // Q* weights per state
    double value = 0.0;
};

/// Maximizes the measure objective over {q : 0 <= q_w <= p_w / alpha, sum q = 1},
/// with one auxiliary per (policyholder, layer) bounded by both the distorted
/// survival and the linear exceedance of q.
inline MeasureSolution solve_measure_lp(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                        double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("insurer ES level must lie in (0,1)");
    detail::check_holders(reference, holders);
    const std::size_t states = reference.size();
    const double scale = detail::money_scale(holders);

    lp::Problem problem;
    for (std::size_t w = 0; w < states; ++w) problem.add_variable(0.0, reference.weight(w) / alpha);
    for (const auto& h : holders) {
        const auto layers = detail::endowment_layers(reference, h);
        for (std::size_t k = 0; k < layers.layer_count(); ++k) {
            const auto aux = problem.add_variable(layers.length(k) / scale, layers.distorted_survival[k]);
            std::vector<lp::Term> terms{{aux, 1.0}};
            for (std::size_t w = 0; w < states; ++w)
                if (h.endowment[w] > layers.breakpoints[k]) terms.push_back({w, -1.0});
            problem.add_constraint(std::move(terms), lp::Relation::LessEqual, 0.0);
        }
    }
    std::vector<lp::Term> mass;
    for (std::size_t w = 0; w < states; ++w) mass.push_back({w, 1.0});
    problem.add_constraint(std::move(mass), lp::Relation::Equal, 1.0);

    const auto sol = lp::solve(problem);
    if (sol.status != lp::Status::Optimal) throw SolverError("measure LP did not reach an optimum");

    MeasureSolution out;
    out.measure.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(states));
    out.value = measure_objective(reference, holders, out.measure);
    return out;
}

/// The measure attaining ES_alpha(Z): weight p_w / alpha on the largest outcomes until the mass is exhausted.
inline std::vector<double> tail_measure(const EmpiricalSpace& space, const LossProfile& z, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ES level must lie in (0,1)");
    detail::check_lengths(space, z);
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
    std::vector<double> q(z.size(), 0.0);
    double remaining = 1.0;
    for (std::size_t w : order) {
        const double take = std::min(space.weight(w) / alpha, remaining);
        q[w] = take;
        remaining -= take;
        if (remaining <= 0.0) break;
    }
    return q;
}

// ============================================================================
// Indemnities
// ============================================================================

enum class LayerCase { Cede, Tie, Retain };

/// Slope of the marginal indemnity on equality layers: a fixed 1/2, or chosen
/// by a second LP that minimizes the realized total risk at the given measure.
enum class TieRule { Half, Optimize };

struct IndemnityOptions {
    TieRule tie_rule = TieRule::Half;
    double tie_tolerance = 1e-12;
};

struct IndemnitySchedule {
    std::vector<double> breakpoints;
    std::vector<double> slopes;              // I'(t) per layer, in [0,1]
    std::vector<LayerCase> cases;
    std::vector<double> measure_survival;    // Q*(X > b_k)
    std::vector<double> distorted_survival;  // nu(X > b_k)

    double indemnity(double x) const {
        double total = 0.0;
        for (std::size_t k = 0; k < slopes.size(); ++k) {
            if (x <= breakpoints[k]) break;
            total += slopes[k] * (std::min(x, breakpoints[k + 1]) - breakpoints[k]);
        }
        return total;
    }
    double retained(double x) const { return x - indemnity(x); }

    /// Deductible level when the slopes read 0...0 1...1 (full retention then
    /// full cession); nullopt for any other pattern. No cession at all reports
    /// the largest breakpoint.
    std::optional<double> deductible() const {
        std::size_t k = 0;
        while (k < slopes.size() && slopes[k] == 0.0) ++k;
        const double d = breakpoints[k];
        for (; k < slopes.size(); ++k)
            if (slopes[k] != 1.0) return std::nullopt;
        return d;
    }
};

struct CentralizedContract {
    double alpha = 0.0;
    std::vector<double> measure;
    double measure_value = 0.0;
    std::vector<IndemnitySchedule> indemnities;
    std::vector<double> premiums;

    bool cedes_nothing() const {
        for (const auto& s : indemnities)
            for (double h : s.slopes)
                if (h > 0.0) return false;
        return true;
    }

    LossProfile ceded(std::size_t holder, const LossProfile& endowment) const {
        std::vector<double> v(endowment.size());
        for (std::size_t w = 0; w < v.size(); ++w) v[w] = indemnities.at(holder).indemnity(endowment[w]);
        return LossProfile(std::move(v));
    }
    LossProfile retained(std::size_t holder, const LossProfile& endowment) const {
        std::vector<double> v(endowment.size());
        for (std::size_t w = 0; w < v.size(); ++w) v[w] = indemnities.at(holder).retained(endowment[w]);
        return LossProfile(std::move(v));
    }
};

namespace detail {

inline void optimize_tie_slopes(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                double alpha, std::vector<IndemnitySchedule>& schedules) {
    struct TieLayer {
        std::size_t holder, layer;
    };
    std::vector<TieLayer> ties;
    for (std::size_t i = 0; i < schedules.size(); ++i)
        for (std::size_t k = 0; k < schedules[i].cases.size(); ++k)
            if (schedules[i].cases[k] == LayerCase::Tie) ties.push_back({i, k});
    if (ties.empty()) return;

    const double scale = money_scale(holders);
    const std::size_t states = reference.size();

    // maximize  sum_j len_j nu_j h_j - z - (1/alpha) sum_w p_w u_w
    // s.t.      sum_j a_wj h_j - z - u_w <= -fixed_w   for each state w
    // i.e. minimize the retained distortion risk plus ES_alpha of the ceded total
    // written in Rockafellar-Uryasev form.
    lp::Problem problem;
    std::vector<std::size_t> h_col;
    for (const auto& t : ties) {
        const auto& s = schedules[t.holder];
        const double len = (s.breakpoints[t.layer + 1] - s.breakpoints[t.layer]) / scale;
        h_col.push_back(problem.add_variable(len * s.distorted_survival[t.layer], 1.0));
    }
    const auto z_col = problem.add_variable(-1.0);
    std::vector<std::size_t> u_col;
    for (std::size_t w = 0; w < states; ++w) u_col.push_back(problem.add_variable(-reference.weight(w) / alpha));

    for (std::size_t w = 0; w < states; ++w) {
        double fixed = 0.0;
        for (std::size_t i = 0; i < schedules.size(); ++i) {
            const auto& s = schedules[i];
            const double x = holders[i].endowment[w];
            for (std::size_t k = 0; k < s.slopes.size(); ++k)
                if (s.cases[k] != LayerCase::Tie && x > s.breakpoints[k])
                    fixed += s.slopes[k] * (s.breakpoints[k + 1] - s.breakpoints[k]) / scale;
        }
        std::vector<lp::Term> terms{{z_col, -1.0}, {u_col[w], -1.0}};
        for (std::size_t j = 0; j < ties.size(); ++j) {
            const auto& s = schedules[ties[j].holder];
            const std::size_t k = ties[j].layer;
            if (holders[ties[j].holder].endowment[w] > s.breakpoints[k])
                terms.push_back({h_col[j], (s.breakpoints[k + 1] - s.breakpoints[k]) / scale});
        }
        problem.add_constraint(std::move(terms), lp::Relation::LessEqual, -fixed);
    }

    const auto sol = lp::solve(problem);
    if (sol.status != lp::Status::Optimal) throw SolverError("tie-slope LP did not reach an optimum");
    for (std::size_t j = 0; j < ties.size(); ++j)
        schedules[ties[j].holder].slopes[ties[j].layer] = std::clamp(sol.x[h_col[j]], 0.0, 1.0);
}

}  // namespace detail

/// Marginal indemnities from a maximizing measure: full cession where
/// Q*(X > t) < nu(X > t), full retention where it is larger, and the tie rule on equality.
inline CentralizedContract build_indemnities(const EmpiricalSpace& reference, const MeasureSolution& measure,
                                             std::span<const PolicyHolder> holders, double alpha,
                                             const IndemnityOptions& options = {}) {
    detail::check_holders(reference, holders);
    if (measure.measure.size() != reference.size())
        throw LengthMismatchError("measure and reference space differ in length");
    CentralizedContract c;
    c.alpha = alpha;
    c.measure = measure.measure;
    c.measure_value = measure.value;
    for (const auto& h : holders) {
        const auto layers = detail::endowment_layers(reference, h);
        IndemnitySchedule s;
        s.breakpoints = layers.breakpoints;
        s.distorted_survival = layers.distorted_survival;
        for (std::size_t k = 0; k < layers.layer_count(); ++k) {
            double q = 0.0;
            for (std::size_t w = 0; w < reference.size(); ++w)
                if (h.endowment[w] > layers.breakpoints[k]) q += measure.measure[w];
            const double nu = layers.distorted_survival[k];
            s.measure_survival.push_back(q);
            if (q < nu - options.tie_tolerance) {
                s.cases.push_back(LayerCase::Cede);
                s.slopes.push_back(1.0);
            } else if (q > nu + options.tie_tolerance) {
                s.cases.push_back(LayerCase::Retain);
                s.slopes.push_back(0.0);
            } else {
                s.cases.push_back(LayerCase::Tie);
                s.slopes.push_back(0.5);
            }
        }
        c.indemnities.push_back(std::move(s));
    }
    if (options.tie_rule == TieRule::Optimize) detail::optimize_tie_slopes(reference, holders, alpha, c.indemnities);
    c.premiums.assign(holders.size(), 0.0);
    return c;
}

// ============================================================================
// Premiums and welfare
// ============================================================================

/// pi_i = rho_i(X_i) - rho_i(X_i - I_i(X_i)): the largest premium each policyholder accepts.
inline std::vector<double> stackelberg_premiums(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                                const CentralizedContract& contract) {
    detail::check_holders(reference, holders);
    std::vector<double> pi(holders.size());
    for (std::size_t i = 0; i < holders.size(); ++i) {
        const auto& h = holders[i];
        pi[i] = choquet(reference, h.endowment, h.distortion) -
                choquet(reference, contract.retained(i, h.endowment), h.distortion);
    }
    return pi;
}

struct CentralizedWelfare {
    std::vector<double> policyholder_gains;
    double insurer_gain = 0.0;
    double aggregate_gain = 0.0;
    double average_gain = 0.0;      // aggregate / (n + 1), insurer included
    double max_aggregate_gain = 0.0;  // sum_i rho_i(X_i) minus the measure LP optimum
    bool cedes_nothing = false;
};

inline CentralizedWelfare centralized_welfare(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                              const CentralizedContract& contract) {
    detail::check_holders(reference, holders);
    CentralizedWelfare w;
    std::vector<LossProfile> ceded;
    double premiums = 0.0;
    double initial = 0.0;
    for (std::size_t i = 0; i < holders.size(); ++i) {
        const auto& h = holders[i];
        const double pi = contract.premiums.empty() ? 0.0 : contract.premiums.at(i);
        const double before = choquet(reference, h.endowment, h.distortion);
        const double after = choquet(reference, contract.retained(i, h.endowment) + pi, h.distortion);
        w.policyholder_gains.push_back(before - after);
        ceded.push_back(contract.ceded(i, h.endowment));
        premiums += pi;
        initial += before;
    }
    w.insurer_gain = premiums - expected_shortfall(reference, sum_profiles(ceded), contract.alpha);
    w.aggregate_gain = w.insurer_gain;
    for (double g : w.policyholder_gains) w.aggregate_gain += g;
    w.average_gain = w.aggregate_gain / static_cast<double>(holders.size() + 1);
    w.max_aggregate_gain = initial - contract.measure_value;
    w.cedes_nothing = contract.cedes_nothing();
    return w;
}

/// Full pipeline: measure LP, indemnities, Stackelberg premiums.
inline CentralizedContract solve_centralized(const EmpiricalSpace& reference, std::span<const PolicyHolder> holders,
                                             double alpha, const IndemnityOptions& options = {}) {
    const auto measure = solve_measure_lp(reference, holders, alpha);
    auto contract = build_indemnities(reference, measure, holders, alpha, options);
    contract.premiums = stackelberg_premiums(reference, holders, contract);
    return contract;
}

}  // namespace paretopool
