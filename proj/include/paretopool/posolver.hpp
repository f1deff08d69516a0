#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "paretopool/distortion.hpp"
#include "paretopool/error.hpp"
#include "paretopool/riskmeasure.hpp"

namespace paretopool {

// ============================================================================
// Market description
// ============================================================================

/// One participant: a belief over the common state set, a (robust) set of
/// distortions, and a non-negative loss endowment.
struct AgentSpec {
    EmpiricalSpace belief;
    DistortionSet distortions;
    LossProfile endowment;
};

inline void check_market(std::span<const AgentSpec> agents) {
    if (agents.empty()) throw DomainError("market needs at least one agent");
    const std::size_t states = agents.front().endowment.size();
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        if (a.endowment.size() != states || a.belief.size() != states)
            throw LengthMismatchError("agent " + std::to_string(i) + " does not share the common state count");
        if (!a.endowment.non_negative())
            throw DomainError("agent " + std::to_string(i) + " has a negative endowment");
    }
}

inline LossProfile aggregate_loss(std::span<const AgentSpec> agents) {
    check_market(agents);
    std::vector<LossProfile> profiles;
    profiles.reserve(agents.size());
    for (const auto& a : agents) profiles.push_back(a.endowment);
    return sum_profiles(profiles);
}

/// rho_i(Z): the agent's robust distortion risk measure under its own belief.
inline double agent_risk(const AgentSpec& agent, const LossProfile& z) {
    return robust_drm(agent.belief, z, agent.distortions).value;
}

// ============================================================================
// Layer decomposition of the aggregate loss
// ============================================================================

/// Breakpoints 0 = b_0 < b_1 < ... < b_m = max(S); every belief's survival
/// function Q_i(S > x) is constant on each open layer (b_k, b_{k+1}).
struct LayerDecomposition {
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> survival;  // [agent][layer]

    std::size_t layer_count() const noexcept { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }
    double length(std::size_t layer) const { return breakpoints[layer + 1] - breakpoints[layer]; }
};

inline LayerDecomposition layer_decomposition(const LossProfile& aggregate, std::span<const EmpiricalSpace> beliefs) {
    if (!aggregate.non_negative()) throw DomainError("aggregate loss must be non-negative");
    LayerDecomposition out;
    std::vector<double> values(aggregate.values().begin(), aggregate.values().end());
    values.push_back(0.0);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    out.breakpoints = std::move(values);

    const std::size_t layers = out.layer_count();
    out.survival.reserve(beliefs.size());
    for (const auto& belief : beliefs) {
        if (belief.size() != aggregate.size()) throw LengthMismatchError("belief and aggregate loss differ in length");
        std::vector<double> row(layers, 0.0);
        for (std::size_t k = 0; k < layers; ++k) row[k] = survival(belief, aggregate, out.breakpoints[k]);
        out.survival.push_back(std::move(row));
    }
    return out;
}

// ============================================================================
// Comonotone layer allocations
// ============================================================================

/// g_i(x) = integral_0^x h_i with h_i constant on each layer of the aggregate
/// loss, plus side payments c_i.
struct LayerAllocation {
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> slopes;  // [layer][agent]; each row sums to 1
    std::vector<double> side_payments;        // per agent; empty until assigned
    std::vector<std::size_t> chosen_distortions;

    std::size_t layer_count() const noexcept { return slopes.size(); }
    std::size_t agent_count() const noexcept { return chosen_distortions.size(); }

    double side_payment(std::size_t agent) const {
        return side_payments.empty() ? 0.0 : side_payments.at(agent);
    }

    /// g_i(x), the agent's share of an aggregate loss x.
    double share(std::size_t agent, double x) const {
        double g = 0.0;
        for (std::size_t k = 0; k < slopes.size(); ++k) {
            const double lo = breakpoints[k];
            const double hi = breakpoints[k + 1];
            if (x <= lo) break;
            g += slopes[k][agent] * (std::min(x, hi) - lo);
        }
        return g;
    }

    /// g_i(S), state by state.
    LossProfile share_profile(std::size_t agent, const LossProfile& aggregate) const {
        std::vector<double> v(aggregate.size());
        for (std::size_t w = 0; w < v.size(); ++w) v[w] = share(agent, aggregate[w]);
        return LossProfile(std::move(v));
    }

    /// g_i(S) + c_i.
    LossProfile position(std::size_t agent, const LossProfile& aggregate) const {
        return share_profile(agent, aggregate) + side_payment(agent);
    }
};

struct FixedSolution {
    LayerAllocation allocation;
    double value = 0.0;  // sum over layers of length * min_i T_i(Q_i(S > x))
};

namespace detail {

inline constexpr double kTieTolerance = 1e-12;

/// distorted[i][c][k] = T_{i,c}(Q_i(S > b_k)).
inline std::vector<std::vector<std::vector<double>>> distorted_survival(std::span<const AgentSpec> agents,
                                                                        const LayerDecomposition& layers) {
    std::vector<std::vector<std::vector<double>>> out(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        for (const auto& d : agents[i].distortions) {
            std::vector<double> row(layers.layer_count());
            for (std::size_t k = 0; k < row.size(); ++k) row[k] = d(layers.survival[i][k]);
            out[i].push_back(std::move(row));
        }
    }
    return out;
}

inline double choice_value(const std::vector<std::vector<std::vector<double>>>& distorted,
                           const LayerDecomposition& layers, std::span<const std::size_t> choice) {
    double value = 0.0;
    for (std::size_t k = 0; k < layers.layer_count(); ++k) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < choice.size(); ++i) m = std::min(m, distorted[i][choice[i]][k]);
        value += layers.length(k) * m;
    }
    return value;
}

inline std::vector<EmpiricalSpace> beliefs_of(std::span<const AgentSpec> agents) {
    std::vector<EmpiricalSpace> beliefs;
    beliefs.reserve(agents.size());
    for (const auto& a : agents) beliefs.push_back(a.belief);
    return beliefs;
}

inline FixedSolution solve_at(std::span<const AgentSpec> agents, const LayerDecomposition& layers,
                              const std::vector<std::vector<std::vector<double>>>& distorted,
                              std::span<const std::size_t> choice) {
    const std::size_t n = agents.size();
    FixedSolution sol;
    auto& alloc = sol.allocation;
    alloc.breakpoints = layers.breakpoints;
    alloc.chosen_distortions.assign(choice.begin(), choice.end());
    alloc.slopes.assign(layers.layer_count(), std::vector<double>(n, 0.0));

    for (std::size_t k = 0; k < layers.layer_count(); ++k) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) m = std::min(m, distorted[i][choice[i]][k]);
        const double tol = kTieTolerance * std::max(std::abs(m), 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (distorted[i][choice[i]][k] <= m + tol) {
                alloc.slopes[k][i] = 1.0;
                break;
            }
        }
    }
    sol.value = choice_value(distorted, layers, choice);
    return sol;
}

}  // namespace detail

/// Pareto optimum when every agent has a single distortion: each layer goes
/// entirely to the lowest-index agent attaining min_i T_i(Q_i(S > x)).
inline FixedSolution solve_fixed(std::span<const AgentSpec> agents) {
    const LossProfile total = aggregate_loss(agents);
    for (const auto& a : agents)
        if (!a.distortions.is_singleton()) throw DomainError("solve_fixed requires singleton distortion sets");
    const auto beliefs = detail::beliefs_of(agents);
    const auto layers = layer_decomposition(total, beliefs);
    const auto distorted = detail::distorted_survival(agents, layers);
    const std::vector<std::size_t> choice(agents.size(), 0);
    return detail::solve_at(agents, layers, distorted, choice);
}

// ============================================================================
// Robust outer maximization
// ============================================================================

struct RobustOptions {
    std::uint64_t exhaustive_cap = 1'000'000;
    bool coordinate_ascent = true;
};

struct RobustSolution {
    std::vector<std::size_t> chosen;
    LayerAllocation allocation;
    double value = 0.0;
    bool exhaustive = true;
};

/// Maximizes the layer-wise minimum over the product of candidate sets, then
/// allocates layers at the maximizer. The lexicographically first maximizer wins.
inline RobustSolution solve_robust(std::span<const AgentSpec> agents, const RobustOptions& options = {}) {
    const LossProfile total = aggregate_loss(agents);
    const auto beliefs = detail::beliefs_of(agents);
    const auto layers = layer_decomposition(total, beliefs);
    const auto distorted = detail::distorted_survival(agents, layers);
    const std::size_t n = agents.size();

    std::vector<std::size_t> sizes(n);
    std::uint64_t product = 1;
    for (std::size_t i = 0; i < n; ++i) {
        sizes[i] = agents[i].distortions.size();
        if (product > std::numeric_limits<std::uint64_t>::max() / sizes[i])
            product = std::numeric_limits<std::uint64_t>::max();
        else
            product *= sizes[i];
    }

    auto improves = [](double candidate, double incumbent) {
        return candidate > incumbent + detail::kTieTolerance * std::max(std::abs(incumbent), 1.0);
    };

    std::vector<std::size_t> best(n, 0);
    double best_value = detail::choice_value(distorted, layers, best);
    const bool exhaustive = product <= options.exhaustive_cap;

    if (exhaustive) {
        std::vector<std::size_t> choice(n, 0);
        for (std::uint64_t step = 1; step < product; ++step) {
            // Odometer with the last agent varying fastest gives lexicographic order.
            for (std::size_t i = n; i-- > 0;) {
                if (++choice[i] < sizes[i]) break;
                choice[i] = 0;
            }
            const double v = detail::choice_value(distorted, layers, choice);
            if (improves(v, best_value)) {
                best_value = v;
                best = choice;
            }
        }
    } else if (options.coordinate_ascent) {
        const std::size_t starts = *std::max_element(sizes.begin(), sizes.end());
        bool have_best = false;
        for (std::size_t s = 0; s < starts; ++s) {
            std::vector<std::size_t> choice(n);
            for (std::size_t i = 0; i < n; ++i) choice[i] = std::min(s, sizes[i] - 1);
            double value = detail::choice_value(distorted, layers, choice);
            for (bool improved = true; improved;) {
                improved = false;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t keep = choice[i];
                    std::size_t arg = keep;
                    double arg_value = value;
                    for (std::size_t c = 0; c < sizes[i]; ++c) {
                        if (c == keep) continue;
                        choice[i] = c;
                        const double v = detail::choice_value(distorted, layers, choice);
                        if (improves(v, arg_value)) {
                            arg = c;
                            arg_value = v;
                        }
                    }
                    choice[i] = arg;
                    if (arg != keep) {
                        value = arg_value;
                        improved = true;
                    }
                }
            }
            if (!have_best || improves(value, best_value)) {
                best = choice;
                best_value = value;
                have_best = true;
            }
        }
    } else {
        throw ResourceError("candidate product of size " + std::to_string(product) + " exceeds the cap of " +
                            std::to_string(options.exhaustive_cap));
    }

    auto fixed = detail::solve_at(agents, layers, distorted, best);
    return RobustSolution{best, std::move(fixed.allocation), fixed.value, exhaustive};
}

// ============================================================================
// Side payments and welfare
// ============================================================================

enum class WeightRule { Equal, AllToLast };

inline double welfare_tolerance(std::span<const AgentSpec> agents) {
    const LossProfile total = aggregate_loss(agents);
    return 1e-9 * std::max(1.0, std::abs(total.max()));
}

/// W = sum_i rho_i(X_i) - sum_i rho_i(g_i(S)).
inline double aggregate_gain(std::span<const AgentSpec> agents, const LayerAllocation& alloc) {
    const LossProfile total = aggregate_loss(agents);
    double w = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i)
        w += agent_risk(agents[i], agents[i].endowment) - agent_risk(agents[i], alloc.share_profile(i, total));
    return w;
}

inline std::vector<double> welfare_weights(WeightRule rule, double gain, std::size_t agents) {
    if (agents == 0) throw DomainError("no agents");
    std::vector<double> w(agents, 0.0);
    if (rule == WeightRule::Equal)
        std::fill(w.begin(), w.end(), gain / static_cast<double>(agents));
    else
        w.back() = gain;
    return w;
}

/// c_i = rho_i(X_i) - rho_i(g_i(S)) - w_i. The weights must be non-negative and sum to W.
inline std::vector<double> side_payments(const LayerAllocation& alloc, std::span<const AgentSpec> agents,
                                         std::span<const double> weights) {
    check_market(agents);
    if (weights.size() != agents.size()) throw InvalidWeightsError("one welfare weight per agent is required");
    const LossProfile total = aggregate_loss(agents);
    const double tol = welfare_tolerance(agents);

    std::vector<double> gross(agents.size());
    double gain = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        gross[i] = agent_risk(agents[i], agents[i].endowment) - agent_risk(agents[i], alloc.share_profile(i, total));
        gain += gross[i];
    }
    double weight_sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < -tol) throw InvalidWeightsError("welfare weights must be non-negative");
        weight_sum += w;
    }
    if (std::abs(weight_sum - gain) > tol)
        throw InvalidWeightsError("welfare weights sum to " + std::to_string(weight_sum) +
                                  " but the aggregate gain is " + std::to_string(gain));

    std::vector<double> c(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) c[i] = gross[i] - weights[i];
    return c;
}

inline std::vector<double> side_payments(const LayerAllocation& alloc, std::span<const AgentSpec> agents,
                                         WeightRule rule = WeightRule::Equal) {
    const auto w = welfare_weights(rule, aggregate_gain(agents, alloc), agents.size());
    return side_payments(alloc, agents, w);
}

struct MarketReport {
    std::vector<double> initial_risk;  // rho_i(X_i)
    std::vector<double> final_risk;    // rho_i(g_i(S) + c_i)
    std::vector<double> gains;         // w_i
    double aggregate_gain = 0.0;
    double average_gain = 0.0;
    double optimum_value = 0.0;        // sum_i rho_i(g_i(S))
};

inline MarketReport welfare_report(std::span<const AgentSpec> agents, const LayerAllocation& alloc) {
    const LossProfile total = aggregate_loss(agents);
    MarketReport r;
    const std::size_t n = agents.size();
    r.initial_risk.resize(n);
    r.final_risk.resize(n);
    r.gains.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.initial_risk[i] = agent_risk(agents[i], agents[i].endowment);
        r.final_risk[i] = agent_risk(agents[i], alloc.position(i, total));
        r.gains[i] = r.initial_risk[i] - r.final_risk[i];
        r.aggregate_gain += r.gains[i];
        r.optimum_value += agent_risk(agents[i], alloc.share_profile(i, total));
    }
    r.average_gain = r.aggregate_gain / static_cast<double>(n);
    return r;
}

// ============================================================================
// Prelec deductible structure
// ============================================================================

/// Agents of the two-agent deductible split: `retention` (smallest first
/// parameter) covers the aggregate loss up to the deductible and `excess`
/// (largest first parameter) covers everything above it.
struct DeductibleAgents {
    std::size_t retention = 0;
    std::size_t excess = 0;
};

inline DeductibleAgents deductible_agents(std::span<const Distortion> distortions) {
    if (distortions.empty()) throw DomainError("no distortions");
    const Family f = distortions.front().family();
    if (f != Family::Prelec1 && f != Family::Prelec2)
        throw UnsupportedError("deductible rule applies to Prelec families only");
    for (const auto& d : distortions) {
        if (d.family() != f) throw UnsupportedError("deductible rule requires a single Prelec family");
        if (f == Family::Prelec2 && d.param(1) != distortions.front().param(1))
            throw UnsupportedError("Prelec-2 deductible rule requires a common beta");
    }
    DeductibleAgents out;
    for (std::size_t i = 1; i < distortions.size(); ++i) {
        if (distortions[i].param(0) < distortions[out.retention].param(0)) out.retention = i;
        if (distortions[i].param(0) > distortions[out.excess].param(0)) out.excess = i;
    }
    return out;
}

/// d* = VaR at level 1/e of the aggregate loss under the common belief.
inline double prelec_deductible(const LossProfile& aggregate, const EmpiricalSpace& belief,
                                std::span<const Distortion> distortions) {
    (void)deductible_agents(distortions);
    return value_at_risk(belief, aggregate, std::exp(-1.0));
}

}  // namespace paretopool
