#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paretopool/distortion.hpp"
#include "paretopool/error.hpp"

namespace paretopool {

// ============================================================================
// Finite probability spaces and loss profiles
// ============================================================================

/// Probability weights over a finite state set. Weights are non-negative and
/// sum to one within 1e-12.
class EmpiricalSpace {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit EmpiricalSpace(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.empty()) throw DomainError("empirical space needs at least one state");
        double sum = 0.0;
        for (double w : weights_) {
            if (!std::isfinite(w) || w < 0.0) throw DomainError("state weights must be finite and non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw DomainError("state weights sum to " + std::to_string(sum) + ", expected 1");
    }

    static EmpiricalSpace uniform(std::size_t states) {
        if (states == 0) throw DomainError("empirical space needs at least one state");
        return EmpiricalSpace(std::vector<double>(states, 1.0 / static_cast<double>(states)));
    }

    /// Rescales arbitrary non-negative masses so they sum to one.
    static EmpiricalSpace normalized(std::vector<double> masses) {
        double sum = 0.0;
        for (double m : masses) {
            if (!std::isfinite(m) || m < 0.0) throw DomainError("state masses must be finite and non-negative");
            sum += m;
        }
        if (!(sum > 0.0)) throw DomainError("state masses must have positive total");
        for (double& m : masses) m /= sum;
        // Re-anchor the rounding residue on the heaviest state.
        const double residue = 1.0 - std::accumulate(masses.begin(), masses.end(), 0.0);
        *std::max_element(masses.begin(), masses.end()) += residue;
        return EmpiricalSpace(std::move(masses));
    }

    std::size_t size() const noexcept { return weights_.size(); }
    double weight(std::size_t state) const { return weights_.at(state); }
    std::span<const double> weights() const noexcept { return weights_; }

private:
    std::vector<double> weights_;
};

/// Money amount per state. Endowments are non-negative; derived allocations may not be.
class LossProfile {
public:
    LossProfile() = default;
    explicit LossProfile(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_)
            if (!std::isfinite(v)) throw DomainError("loss profile values must be finite");
    }
    LossProfile(std::initializer_list<double> values) : LossProfile(std::vector<double>(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t state) const { return values_[state]; }
    std::span<const double> values() const noexcept { return values_; }

    bool non_negative() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
    }
    double min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
    double max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

    LossProfile operator+(double c) const {
        auto v = values_;
        for (double& x : v) x += c;
        return LossProfile(std::move(v));
    }
    LossProfile operator*(double c) const {
        auto v = values_;
        for (double& x : v) x *= c;
        return LossProfile(std::move(v));
    }
    LossProfile operator+(const LossProfile& other) const {
        if (other.size() != size()) throw LengthMismatchError("loss profiles differ in length");
        auto v = values_;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.values_[i];
        return LossProfile(std::move(v));
    }

    friend bool operator==(const LossProfile&, const LossProfile&) = default;

private:
    std::vector<double> values_;
};

/// Pointwise sum of the given profiles.
inline LossProfile sum_profiles(std::span<const LossProfile> profiles) {
    if (profiles.empty()) return {};
    std::vector<double> total(profiles.front().size(), 0.0);
    for (const auto& p : profiles) {
        if (p.size() != total.size()) throw LengthMismatchError("loss profiles differ in length");
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
    }
    return LossProfile(std::move(total));
}

namespace detail {

inline void check_lengths(const EmpiricalSpace& space, const LossProfile& z) {
    if (space.size() != z.size())
        throw LengthMismatchError("profile has " + std::to_string(z.size()) + " states, space has " +
                                  std::to_string(space.size()));
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

/// Distinct support values in increasing order with Q(Z > value) for each.
struct TailTable {
    std::vector<double> values;
    std::vector<double> exceedance;
};

inline TailTable tail_table(const EmpiricalSpace& space, const LossProfile& z) {
    check_lengths(space, z);
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

    TailTable table;
    std::vector<double> mass;
    for (std::size_t idx : order) {
        if (table.values.empty() || z[idx] != table.values.back()) {
            table.values.push_back(z[idx]);
            mass.push_back(0.0);
        }
        mass.back() += space.weight(idx);
    }
    // Take whichever of the upper and lower cumulative sums is smaller, so
    // probabilities near 0 and near 1 both keep full precision. Distortions with
    // unbounded slope at 1 (Prelec with small alpha) need the latter.
    const std::size_t m = table.values.size();
    table.exceedance.assign(m, 0.0);
    std::vector<double> upper(m, 0.0);
    double tail = 0.0;
    for (std::size_t k = m; k-- > 0;) {
        upper[k] = tail;
        tail += mass[k];
    }
    double below = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        below += mass[k];
        table.exceedance[k] = clamp_probability(below <= 0.5 ? 1.0 - below : upper[k]);
    }
    return table;
}

}  // namespace detail

// ============================================================================
// Risk functionals
// ============================================================================

/// Q(Z > x), strict inequality.
inline double survival(const EmpiricalSpace& space, const LossProfile& z, double x) {
    detail::check_lengths(space, z);
    double tail = 0.0, below = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        (z[i] > x ? tail : below) += space.weight(i);
    return detail::clamp_probability(below <= 0.5 ? 1.0 - below : tail);
}

/// Choquet integral of Z with respect to T o Q, exact on the sorted distinct support:
///   z_1 + sum_k (z_{k+1} - z_k) T(Q(Z > z_k)).
inline double choquet(const EmpiricalSpace& space, const LossProfile& z, const Distortion& d) {
    const auto table = detail::tail_table(space, z);
    if (table.values.empty()) return 0.0;
    double result = table.values.front();
    for (std::size_t k = 0; k + 1 < table.values.size(); ++k)
        result += (table.values[k + 1] - table.values[k]) * d(table.exceedance[k]);
    return result;
}

/// inf{t : Q(Z > t) <= level}.
inline double value_at_risk(const EmpiricalSpace& space, const LossProfile& z, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("VaR level must lie in (0,1)");
    const auto table = detail::tail_table(space, z);
    constexpr double tol = 1e-12;
    for (std::size_t k = 0; k < table.values.size(); ++k)
        if (table.exceedance[k] <= level + tol) return table.values[k];
    return table.values.back();
}

/// (1/level) * integral over u in (0, level) of VaR_u(Z), integrated exactly over the
/// piecewise-constant quantile function.
inline double expected_shortfall(const EmpiricalSpace& space, const LossProfile& z, double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("ES level must lie in (0,1)");
    const auto table = detail::tail_table(space, z);
    // VaR_u = values[k] for u in [exceedance[k], exceedance[k-1]), with exceedance[-1] = 1.
    double integral = 0.0;
    double upper = 1.0;
    for (std::size_t k = 0; k < table.values.size(); ++k) {
        const double lower = table.exceedance[k];
        const double width = std::max(0.0, std::min(upper, level) - std::min(lower, level));
        integral += width * table.values[k];
        upper = lower;
    }
    return integral / level;
}

struct RobustValue {
    double value = 0.0;
    std::size_t index = 0;
};

/// max over the candidates of the Choquet integral; ties go to the lowest index.
inline RobustValue robust_drm(const EmpiricalSpace& space, const LossProfile& z, const DistortionSet& set) {
    RobustValue best{choquet(space, z, set[0]), 0};
    for (std::size_t c = 1; c < set.size(); ++c) {
        const double v = choquet(space, z, set[c]);
        if (v > best.value) best = {v, c};
    }
    return best;
}

}  // namespace paretopool
