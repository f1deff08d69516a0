#pragma once

// Deliberately naive brute-force verifiers. Each one re-derives its quantity
// from definitions without calling the main solver paths, and refuses inputs
// beyond desk scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "paretopool/centralized.hpp"
#include "paretopool/distortion.hpp"
#include "paretopool/error.hpp"
#include "paretopool/posolver.hpp"
#include "paretopool/riskmeasure.hpp"

namespace paretopool::oracle {

struct GridSpec {
    std::vector<double> slopes{0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t max_states = 4;
    std::size_t max_agents = 3;

    static GridSpec extreme() { return GridSpec{{0.0, 1.0}}; }
};

/// Sort states by Z descending and accumulate (z_(k) - z_(k+1)) T(weight of the top k states).
inline double brute_force_choquet(const EmpiricalSpace& space, const LossProfile& z, const Distortion& d) {
    if (space.size() != z.size()) throw LengthMismatchError("profile and space differ in length");
    if (z.size() > 10000) throw ResourceError("brute-force Choquet is capped at 1e4 states");
    std::vector<std::size_t> idx(z.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
    // rest[k] = mass strictly after position k in the descending order.
    std::vector<double> rest(idx.size(), 0.0);
    for (std::size_t k = idx.size() - 1; k-- > 0;) rest[k] = rest[k + 1] + space.weight(idx[k + 1]);
    double result = 0.0;
    double top = 0.0;
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        top += space.weight(idx[k]);
        const double p = top <= 0.5 ? top : 1.0 - rest[k];
        result += (z[idx[k]] - z[idx[k + 1]]) * d(std::clamp(p, 0.0, 1.0));
    }
    return result + z[idx.back()];
}

namespace detail {

inline std::vector<std::vector<double>> slope_combinations(const std::vector<double>& grid, std::size_t agents) {
    std::vector<std::vector<double>> out;
    std::vector<double> cur(agents);
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double sum) {
        if (i == agents) {
            if (std::abs(sum - 1.0) <= 1e-12) out.push_back(cur);
            return;
        }
        for (double g : grid) {
            if (sum + g > 1.0 + 1e-12) continue;
            cur[i] = g;
            rec(i + 1, sum + g);
        }
    };
    rec(0, 0.0);
    return out;
}

inline void check_grid(const GridSpec& grid) {
    auto has = [&](double v) { return std::find(grid.slopes.begin(), grid.slopes.end(), v) != grid.slopes.end(); };
    if (!has(0.0) || !has(1.0)) throw DomainError("slope grid must contain 0 and 1");
    for (double g : grid.slopes)
        if (g < 0.0 || g > 1.0) throw DomainError("slope grid must lie in [0,1]");
}

}  // namespace detail

/// min over all per-layer grid slope combinations (summing to 1) of sum_i rho_i(g_i(S)).
inline double brute_force_po(std::span<const AgentSpec> agents, const GridSpec& grid = {}) {
    detail::check_grid(grid);
    if (agents.empty()) throw DomainError("no agents");
    const std::size_t n = agents.size();
    const std::size_t states = agents.front().endowment.size();
    if (n > grid.max_agents || states > grid.max_states) throw ResourceError("instance too large for brute force");
    for (const auto& a : agents)
        if (!a.distortions.is_singleton()) throw DomainError("brute_force_po requires singleton distortion sets");

    std::vector<double> s(states, 0.0);
    for (const auto& a : agents)
        for (std::size_t w = 0; w < states; ++w) s[w] += a.endowment[w];
    std::vector<double> cuts(s);
    cuts.push_back(0.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const std::size_t layers = cuts.size() - 1;

    const auto combos = detail::slope_combinations(grid.slopes, n);
    std::vector<std::size_t> pick(layers, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> g(states, 0.0);
            for (std::size_t w = 0; w < states; ++w)
                for (std::size_t k = 0; k < layers; ++k)
                    if (s[w] >= cuts[k + 1]) g[w] += combos[pick[k]][i] * (cuts[k + 1] - cuts[k]);
            total += brute_force_choquet(agents[i].belief, LossProfile(std::move(g)), agents[i].distortions[0]);
        }
        best = std::min(best, total);
        std::size_t k = 0;
        for (; k < layers; ++k) {
            if (++pick[k] < combos.size()) break;
            pick[k] = 0;
        }
        if (k == layers) break;
    }
    return best;
}

/// max over the product of candidate sets of brute_force_po with those candidates fixed.
inline double brute_force_robust(std::span<const AgentSpec> agents, const GridSpec& grid = {}) {
    if (agents.empty()) throw DomainError("no agents");
    std::size_t product = 1;
    for (const auto& a : agents) product *= a.distortions.size();
    if (product > 1000) throw ResourceError("candidate product too large for brute force");

    std::vector<std::size_t> choice(agents.size(), 0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t step = 0; step < product; ++step) {
        std::vector<AgentSpec> fixed;
        for (std::size_t i = 0; i < agents.size(); ++i)
            fixed.push_back({agents[i].belief, DistortionSet::singleton(agents[i].distortions[choice[i]]),
                             agents[i].endowment});
        best = std::max(best, brute_force_po(fixed, grid));
        for (std::size_t i = agents.size(); i-- > 0;) {
            if (++choice[i] < agents[i].distortions.size()) break;
            choice[i] = 0;
        }
    }
    return best;
}

namespace detail {

/// Solves the square system a x = b in place; nullopt when (numerically) singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-12) return std::nullopt;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = 0; c < n; ++c) b[c] /= a[c][c];
    return b;
}

struct Hyperplane {
    std::vector<double> normal;
    double offset;
};

/// Every point of {0 <= q <= p/alpha, sum q = 1} where n-1 of the given
/// hyperplanes (plus the mass constraint) are active.
inline std::vector<std::vector<double>> arrangement_vertices(const EmpiricalSpace& space, double alpha,
                                                             const std::vector<Hyperplane>& extra) {
    const std::size_t n = space.size();
    std::vector<Hyperplane> pool;
    for (std::size_t w = 0; w < n; ++w) {
        std::vector<double> e(n, 0.0);
        e[w] = 1.0;
        pool.push_back({e, 0.0});
        pool.push_back({e, space.weight(w) / alpha});
    }
    pool.insert(pool.end(), extra.begin(), extra.end());

    std::vector<std::vector<double>> out;
    std::vector<std::size_t> sel;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (sel.size() == n - 1) {
            std::vector<std::vector<double>> a{std::vector<double>(n, 1.0)};
            std::vector<double> b{1.0};
            for (std::size_t s : sel) {
                a.push_back(pool[s].normal);
                b.push_back(pool[s].offset);
            }
            auto q = solve_square(std::move(a), std::move(b));
            if (!q) return;
            for (std::size_t w = 0; w < n; ++w) {
                const double hi = space.weight(w) / alpha;
                if ((*q)[w] < -1e-12 || (*q)[w] > hi + 1e-12) return;
                (*q)[w] = std::clamp((*q)[w], 0.0, hi);
            }
            out.push_back(std::move(*q));
            return;
        }
        for (std::size_t s = start; s < pool.size(); ++s) {
            sel.push_back(s);
            rec(s + 1);
            sel.pop_back();
        }
    };
    rec(0);
    return out;
}

}  // namespace detail

/// Vertices of the ES dual set {q : 0 <= q_w <= p_w / alpha, sum q = 1}.
inline std::vector<std::vector<double>> dual_set_vertices(const EmpiricalSpace& space, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (space.size() > 6) throw ResourceError("dual-set enumeration is capped at 6 states");
    return detail::arrangement_vertices(space, alpha, {});
}

/// max over the ES dual set of E_Q[Z], by vertex enumeration.
inline double es_dual_max(const EmpiricalSpace& space, const LossProfile& z, double alpha) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : dual_set_vertices(space, alpha)) {
        double e = 0.0;
        for (std::size_t w = 0; w < q.size(); ++w) e += q[w] * z[w];
        best = std::max(best, e);
    }
    return best;
}

/// Maximum of the concave measure objective over the ES dual set. The maximum
/// sits at a vertex of the dual set refined by the kink hyperplanes
/// Q(X_i > t) = nu_i(X_i > t), so all such points are enumerated.
inline double brute_force_lp(const EmpiricalSpace& space, std::span<const PolicyHolder> holders, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    const std::size_t n = space.size();
    if (n > 6) throw ResourceError("brute-force LP is capped at 6 states");

    struct Piece {
        std::vector<double> indicator;
        double length;
        double nu;
    };
    std::vector<Piece> pieces;
    for (const auto& h : holders) {
        if (h.endowment.size() != n) throw LengthMismatchError("endowment and space differ in length");
        std::vector<double> cuts(h.endowment.values().begin(), h.endowment.values().end());
        cuts.push_back(0.0);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            Piece p{std::vector<double>(n, 0.0), cuts[k + 1] - cuts[k], 0.0};
            double mass = 0.0, rest = 0.0;
            for (std::size_t w = 0; w < n; ++w) {
                if (h.endowment[w] > cuts[k]) {
                    p.indicator[w] = 1.0;
                    mass += space.weight(w);
                } else {
                    rest += space.weight(w);
                }
            }
            // Near 1 the complement is the accurate side; steep distortions notice the ulp.
            if (rest <= 0.5) mass = 1.0 - rest;
            p.nu = h.distortion(std::clamp(mass, 0.0, 1.0));
            pieces.push_back(std::move(p));
        }
    }

    std::vector<detail::Hyperplane> kinks;
    for (const auto& p : pieces) kinks.push_back({p.indicator, p.nu});

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : detail::arrangement_vertices(space, alpha, kinks)) {
        double value = 0.0;
        for (const auto& p : pieces) {
            double mass = 0.0;
            for (std::size_t w = 0; w < n; ++w) mass += p.indicator[w] * q[w];
            value += p.length * std::min(mass, p.nu);
        }
        best = std::max(best, value);
    }
    return best;
}

}  // namespace paretopool::oracle
