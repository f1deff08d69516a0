#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "paretopool/error.hpp"

namespace paretopool {

// ============================================================================
// Distortion functions
// ============================================================================

enum class Family {
    Identity,
    Power,            // t^gamma
    Prelec1,          // exp(-(-ln t)^alpha)
    Prelec2,          // exp(-beta (-ln t)^alpha)
    KahnemanTversky,  // t^g / (t^g + (1-t)^g)^(1/g)
    Tvar,             // min(t / alpha, 1)
    Tabulated,        // piecewise linear through knots
};

inline std::string_view to_string(Family f) {
    switch (f) {
        case Family::Identity: return "identity";
        case Family::Power: return "power";
        case Family::Prelec1: return "prelec1";
        case Family::Prelec2: return "prelec2";
        case Family::KahnemanTversky: return "kahneman_tversky";
        case Family::Tvar: return "tvar";
        case Family::Tabulated: return "tabulated";
    }
    return "unknown";
}

inline Family family_from_string(std::string_view name) {
    if (name == "identity") return Family::Identity;
    if (name == "power") return Family::Power;
    if (name == "prelec1") return Family::Prelec1;
    if (name == "prelec2") return Family::Prelec2;
    if (name == "kahneman_tversky" || name == "kt") return Family::KahnemanTversky;
    if (name == "tvar") return Family::Tvar;
    if (name == "tabulated") return Family::Tabulated;
    throw DomainError("unknown distortion family '" + std::string(name) + "'");
}

/// Names of the parameters each family takes, in storage order.
inline std::vector<std::string_view> parameter_names(Family f) {
    switch (f) {
        case Family::Power:
        case Family::KahnemanTversky: return {"gamma"};
        case Family::Prelec1:
        case Family::Tvar: return {"alpha"};
        case Family::Prelec2: return {"alpha", "beta"};
        case Family::Identity:
        case Family::Tabulated: return {};
    }
    return {};
}

struct Knot {
    double t = 0.0;
    double value = 0.0;

    friend bool operator==(const Knot&, const Knot&) = default;
};

struct ValidationIssue {
    enum class Kind { ParameterRange, Knots, Boundary, Monotonicity };
    Kind kind;
    std::string message;
};

class Distortion;
inline std::vector<ValidationIssue> validate(const Distortion& d);

/// A non-decreasing map T: [0,1] -> [0,1] with T(0) = 0 and T(1) = 1.
///
/// The named factories enforce each family's parameter domain and throw
/// DomainError otherwise. `unchecked` builds an arbitrary value so that
/// `validate` can report on it.
class Distortion {
public:
    static constexpr int kMonotonicityGrid = 10000;
    static constexpr double kKtMinGamma = 0.279;
    static constexpr double kKtStep = 1e-6;

    Distortion() = default;

    static Distortion identity() { return checked(Family::Identity, {}, {}); }
    static Distortion power(double gamma) { return checked(Family::Power, {gamma}, {}); }
    static Distortion prelec1(double alpha) { return checked(Family::Prelec1, {alpha}, {}); }
    static Distortion prelec2(double alpha, double beta) {
        return checked(Family::Prelec2, {alpha, beta}, {});
    }
    static Distortion kahneman_tversky(double gamma) {
        return checked(Family::KahnemanTversky, {gamma}, {});
    }
    static Distortion tvar(double alpha) { return checked(Family::Tvar, {alpha}, {}); }
    static Distortion tabulated(std::vector<Knot> knots) {
        Distortion d = unchecked(Family::Tabulated, {}, std::move(knots));
        // Tabulated values have no parameter domain; every invariant is checked here.
        auto issues = validate(d);
        if (!issues.empty()) throw DomainError("invalid tabulated distortion: " + issues.front().message);
        return d;
    }

    static Distortion make(Family f, std::vector<double> params, std::vector<Knot> knots = {}) {
        if (f == Family::Tabulated) return tabulated(std::move(knots));
        return checked(f, std::move(params), std::move(knots));
    }

    static Distortion unchecked(Family f, std::vector<double> params, std::vector<Knot> knots = {}) {
        Distortion d;
        d.family_ = f;
        d.params_ = std::move(params);
        d.knots_ = std::move(knots);
        return d;
    }

    Family family() const noexcept { return family_; }
    std::span<const double> params() const noexcept { return params_; }
    std::span<const Knot> knots() const noexcept { return knots_; }

    double param(std::size_t i) const {
        if (i >= params_.size()) throw DomainError("distortion parameter index out of range");
        return params_[i];
    }

    /// T(t); throws DomainError for t outside [0,1].
    double operator()(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("distortion argument outside [0,1]");
        return evaluate(t);
    }

    friend bool operator==(const Distortion&, const Distortion&) = default;

    std::string describe() const {
        std::string out(to_string(family_));
        auto names = parameter_names(family_);
        out += '(';
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (i) out += ", ";
            if (i < names.size()) {
                out += names[i];
                out += '=';
            }
            out += std::to_string(params_[i]);
        }
        if (family_ == Family::Tabulated) out += std::to_string(knots_.size()) + " knots";
        out += ')';
        return out;
    }

private:
    static Distortion checked(Family f, std::vector<double> params, std::vector<Knot> knots);

    double evaluate(double t) const {
        switch (family_) {
            case Family::Identity: return t;
            case Family::Power: return t == 0.0 ? 0.0 : std::pow(t, params_[0]);
            case Family::Prelec1:
                if (t == 0.0) return 0.0;
                return std::exp(-std::pow(-std::log(t), params_[0]));
            case Family::Prelec2:
                if (t == 0.0) return 0.0;
                return std::exp(-params_[1] * std::pow(-std::log(t), params_[0]));
            case Family::KahnemanTversky: {
                if (t == 0.0) return 0.0;
                if (t == 1.0) return 1.0;
                const double g = params_[0];
                const double a = std::pow(t, g);
                const double b = std::pow(1.0 - t, g);
                return a / std::pow(a + b, 1.0 / g);
            }
            case Family::Tvar: return std::min(t / params_[0], 1.0);
            case Family::Tabulated: {
                auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                           [](double x, const Knot& k) { return x < k.t; });
                if (it == knots_.begin()) return knots_.front().value;
                if (it == knots_.end()) return knots_.back().value;
                const Knot& hi = *it;
                const Knot& lo = *(it - 1);
                const double w = (t - lo.t) / (hi.t - lo.t);
                return lo.value + w * (hi.value - lo.value);
            }
        }
        return t;
    }

    Family family_ = Family::Identity;
    std::vector<double> params_;
    std::vector<Knot> knots_;
};

namespace detail {

inline std::vector<ValidationIssue> parameter_issues(const Distortion& d) {
    using Kind = ValidationIssue::Kind;
    std::vector<ValidationIssue> issues;
    auto p = d.params();
    const auto expected = parameter_names(d.family()).size();
    if (p.size() != expected) {
        issues.push_back({Kind::ParameterRange, std::string(to_string(d.family())) + " expects " +
                                                    std::to_string(expected) + " parameter(s), got " +
                                                    std::to_string(p.size())});
        return issues;
    }
    for (double v : p) {
        if (!std::isfinite(v)) {
            issues.push_back({Kind::ParameterRange, "non-finite parameter"});
            return issues;
        }
    }
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    switch (d.family()) {
        case Family::Power:
            if (!(p[0] > 0.0)) issues.push_back({Kind::ParameterRange, "power requires gamma > 0"});
            break;
        case Family::Prelec1:
            if (!open_unit(p[0])) issues.push_back({Kind::ParameterRange, "prelec1 requires alpha in (0,1)"});
            break;
        case Family::Prelec2:
            if (!open_unit(p[0])) issues.push_back({Kind::ParameterRange, "prelec2 requires alpha in (0,1)"});
            if (!(p[1] > 0.0)) issues.push_back({Kind::ParameterRange, "prelec2 requires beta > 0"});
            break;
        case Family::KahnemanTversky:
            if (!(p[0] > Distortion::kKtMinGamma && p[0] <= 1.0))
                issues.push_back({Kind::ParameterRange, "kahneman_tversky requires gamma in (0.279,1]"});
            break;
        case Family::Tvar:
            if (!open_unit(p[0])) issues.push_back({Kind::ParameterRange, "tvar requires alpha in (0,1)"});
            break;
        case Family::Identity:
        case Family::Tabulated: break;
    }
    return issues;
}

inline std::vector<ValidationIssue> knot_issues(std::span<const Knot> knots) {
    using Kind = ValidationIssue::Kind;
    std::vector<ValidationIssue> issues;
    if (knots.size() < 2) {
        issues.push_back({Kind::Knots, "tabulated distortion needs at least two knots"});
        return issues;
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const auto& k = knots[i];
        if (!std::isfinite(k.t) || !std::isfinite(k.value) || k.t < 0.0 || k.t > 1.0 || k.value < 0.0 ||
            k.value > 1.0) {
            issues.push_back({Kind::Knots, "knot " + std::to_string(i) + " lies outside the unit square"});
        }
        if (i > 0 && !(k.t > knots[i - 1].t)) {
            issues.push_back({Kind::Knots, "knot abscissae must be strictly increasing"});
        }
    }
    if (knots.front().t != 0.0 || knots.back().t != 1.0) {
        issues.push_back({Kind::Knots, "knots must span t = 0 to t = 1"});
    }
    return issues;
}

}  // namespace detail

/// Lists every violated invariant; an empty result means `d` is a valid distortion.
inline std::vector<ValidationIssue> validate(const Distortion& d) {
    using Kind = ValidationIssue::Kind;
    std::vector<ValidationIssue> issues = d.family() == Family::Tabulated ? detail::knot_issues(d.knots())
                                                                          : detail::parameter_issues(d);
    if (!issues.empty()) return issues;

    constexpr double tol = 1e-12;
    if (std::abs(d(0.0)) > tol) issues.push_back({Kind::Boundary, "T(0) != 0"});
    if (std::abs(d(1.0) - 1.0) > tol) issues.push_back({Kind::Boundary, "T(1) != 1"});

    if (d.family() == Family::Tabulated) {
        auto knots = d.knots();
        for (std::size_t i = 1; i < knots.size(); ++i) {
            if (knots[i].value < knots[i - 1].value) {
                issues.push_back({Kind::Monotonicity, "decreasing segment between knots " + std::to_string(i - 1) +
                                                          " and " + std::to_string(i)});
                break;
            }
        }
        return issues;
    }

    const int n = Distortion::kMonotonicityGrid;
    double prev = d(0.0);
    for (int k = 1; k < n; ++k) {
        const double t = static_cast<double>(k) / (n - 1);
        const double cur = d(t);
        if (cur < prev - tol) {
            issues.push_back({Kind::Monotonicity, "decreasing near t = " + std::to_string(t)});
            break;
        }
        prev = cur;
    }
    return issues;
}

inline Distortion Distortion::checked(Family f, std::vector<double> params, std::vector<Knot> knots) {
    Distortion d = unchecked(f, std::move(params), std::move(knots));
    auto issues = detail::parameter_issues(d);
    if (!issues.empty()) throw DomainError(issues.front().message);
    return d;
}

inline double eval(const Distortion& d, double t) { return d(t); }

// ============================================================================
// Probabilistic risk aversion
// ============================================================================

/// Probabilistic risk aversion index -T''(t) / T'(t) for t in (0,1).
///
/// Prelec families use the closed form
///   (ln t + a b (-ln t)^a - a + 1) / (t ln t)   (b = 1 for Prelec-1);
/// Kahneman-Tversky uses central differences with step 1e-6.
inline double pra(const Distortion& d, double t) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("PRA requires t in (0,1)");
    switch (d.family()) {
        case Family::Identity: return 0.0;
        case Family::Power: return (1.0 - d.param(0)) / t;
        case Family::Prelec1:
        case Family::Prelec2: {
            const double a = d.param(0);
            const double b = d.family() == Family::Prelec2 ? d.param(1) : 1.0;
            const double lt = std::log(t);
            return (lt + a * b * std::pow(-lt, a) - a + 1.0) / (t * lt);
        }
        case Family::KahnemanTversky: {
            const double h = Distortion::kKtStep;
            if (t - h < 0.0 || t + h > 1.0) throw DomainError("PRA stencil leaves [0,1]");
            const double lo = d(t - h);
            const double mid = d(t);
            const double hi = d(t + h);
            const double first = (hi - lo) / (2.0 * h);
            const double second = (hi - 2.0 * mid + lo) / (h * h);
            if (first == 0.0) throw SingularityError("T'(t) = 0");
            return -second / first;
        }
        case Family::Tvar:
            // Linear below alpha, flat above; the kink itself is not differentiable.
            if (t < d.param(0)) return 0.0;
            throw SingularityError("tvar distortion has T'(t) = 0 for t >= alpha");
        case Family::Tabulated: throw UnsupportedError("PRA is not defined for tabulated distortions");
    }
    throw UnsupportedError("unknown family");
}

/// Relative index t * PRA(t).
inline double rpra(const Distortion& d, double t) { return t * pra(d, t); }

// ============================================================================
// Candidate sets
// ============================================================================

/// Non-empty finite set of valid distortions; the sup over it defines a robust risk measure.
class DistortionSet {
public:
    explicit DistortionSet(std::vector<Distortion> candidates) : candidates_(std::move(candidates)) {
        if (candidates_.empty()) throw DomainError("distortion set must not be empty");
        for (std::size_t i = 0; i < candidates_.size(); ++i) {
            auto issues = validate(candidates_[i]);
            if (!issues.empty())
                throw DomainError("candidate " + std::to_string(i) + " is invalid: " + issues.front().message);
        }
    }
    DistortionSet(std::initializer_list<Distortion> candidates)
        : DistortionSet(std::vector<Distortion>(candidates)) {}

    static DistortionSet singleton(Distortion d) { return DistortionSet({std::move(d)}); }

    std::size_t size() const noexcept { return candidates_.size(); }
    bool is_singleton() const noexcept { return candidates_.size() == 1; }
    const Distortion& operator[](std::size_t i) const { return candidates_.at(i); }
    auto begin() const noexcept { return candidates_.begin(); }
    auto end() const noexcept { return candidates_.end(); }
    std::span<const Distortion> candidates() const noexcept { return candidates_; }

private:
    std::vector<Distortion> candidates_;
};

}  // namespace paretopool
