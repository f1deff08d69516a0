#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "paretopool/oracle.hpp"
#include "support/generators.hpp"

using namespace paretopool;

namespace {

AgentSpec agent(const EmpiricalSpace& belief, const Distortion& d, std::vector<double> x) {
    return {belief, DistortionSet::singleton(d), LossProfile(std::move(x))};
}

}  // namespace

TEST(OracleChoquet, HandExamples) {
    const auto half = EmpiricalSpace::uniform(2);
    EXPECT_NEAR(oracle::brute_force_choquet(half, LossProfile({0.0, 10.0}), Distortion::power(0.5)), 7.0710678118654755,
                1e-12);
    EXPECT_NEAR(oracle::brute_force_choquet(EmpiricalSpace({0.2, 0.3, 0.5}), LossProfile({1.0, 4.0, 7.0}),
                                            Distortion::identity()),
                4.9, 1e-12);
    EXPECT_NEAR(oracle::brute_force_choquet(half, LossProfile({3.0, 3.0}), Distortion::prelec1(0.4)), 3.0, 1e-12);
    EXPECT_THROW(oracle::brute_force_choquet(half, LossProfile({1.0}), Distortion::identity()), LengthMismatchError);
}

TEST(OraclePo, HandExamples) {
    const auto half = EmpiricalSpace::uniform(2);
    const std::vector<AgentSpec> two{agent(half, Distortion::power(0.5), {0.0, 6.0}),
                                     agent(half, Distortion::power(0.8), {0.0, 4.0})};
    EXPECT_NEAR(oracle::brute_force_po(two), 10.0 * std::pow(0.5, 0.8), 1e-12);

    const auto third = EmpiricalSpace::uniform(3);
    const std::vector<AgentSpec> same{agent(third, Distortion::kahneman_tversky(0.6), {0.0, 1.0, 5.0}),
                                      agent(third, Distortion::kahneman_tversky(0.6), {2.0, 0.0, 1.0})};
    EXPECT_NEAR(oracle::brute_force_po(same),
                choquet(third, LossProfile({2.0, 1.0, 6.0}), Distortion::kahneman_tversky(0.6)), 1e-12);

    // S = (0,1,2,4): Q(S > 0) = .75, Q(S > 1) = .5, Q(S > 2) = .25. Alpha 0.3 is
    // cheapest on the first two layers (survival above 1/e), alpha 0.9 on the last.
    const auto quarter = EmpiricalSpace::uniform(4);
    const std::vector<AgentSpec> prelec{agent(quarter, Distortion::prelec1(0.9), {0.0, 1.0, 0.0, 2.0}),
                                        agent(quarter, Distortion::prelec1(0.3), {0.0, 0.0, 1.0, 1.0}),
                                        agent(quarter, Distortion::prelec1(0.6), {0.0, 0.0, 1.0, 1.0})};
    const auto lo = Distortion::prelec1(0.3), hi = Distortion::prelec1(0.9);
    EXPECT_NEAR(oracle::brute_force_po(prelec), lo(0.75) + lo(0.5) + 2.0 * hi(0.25), 1e-12);
}

TEST(OraclePo, GridChecksAndCaps) {
    const auto half = EmpiricalSpace::uniform(2);
    const std::vector<AgentSpec> two{agent(half, Distortion::power(0.5), {0.0, 6.0}),
                                     agent(half, Distortion::power(0.8), {0.0, 4.0})};
    EXPECT_THROW(oracle::brute_force_po(two, {{0.5, 1.0}}), DomainError);
    EXPECT_THROW(oracle::brute_force_po(two, {{0.0, 0.5}}), DomainError);
    EXPECT_THROW(oracle::brute_force_po(two, {{0.0, 1.0, 1.5}}), DomainError);
    const auto five = EmpiricalSpace::uniform(5);
    EXPECT_THROW(oracle::brute_force_po(std::vector<AgentSpec>{agent(five, Distortion::power(0.5), {0, 1, 2, 3, 4})}),
                 ResourceError);
    std::vector<AgentSpec> many(4, agent(half, Distortion::power(0.5), {0.0, 1.0}));
    EXPECT_THROW(oracle::brute_force_po(many), ResourceError);
}

TEST(OraclePo, FinerGridsNeverRaiseTheMinimumAndExtremesSuffice) {
    std::mt19937_64 rng(501);
    const oracle::GridSpec fine{{0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0}, 3, 2};
    for (int trial = 0; trial < 40; ++trial) {
        const auto agents = gen::random_market(rng, {.max_states = 3, .max_agents = 2});
        const double extreme = oracle::brute_force_po(agents, oracle::GridSpec::extreme());
        const double standard = oracle::brute_force_po(agents);
        const double finer = oracle::brute_force_po(agents, fine);
        EXPECT_LE(standard, extreme + 1e-12);
        EXPECT_LE(finer, standard + 1e-12);
        EXPECT_NEAR(extreme, finer, 1e-9 * std::max(1.0, aggregate_loss(agents).max()));
    }
}

TEST(OracleRobust, HandExampleAndCap) {
    const auto half = EmpiricalSpace::uniform(2);
    const std::vector<AgentSpec> lone{
        {half, DistortionSet({Distortion::power(0.5), Distortion::power(0.8)}), LossProfile({0.0, 10.0})}};
    EXPECT_NEAR(oracle::brute_force_robust(lone), 10.0 * std::sqrt(0.5), 1e-12);

    std::vector<Distortion> eleven;
    for (int k = 0; k < 11; ++k) eleven.push_back(Distortion::power(0.3 + 0.05 * k));
    const std::vector<AgentSpec> big(3, AgentSpec{half, DistortionSet(eleven), LossProfile({0.0, 1.0})});
    EXPECT_THROW(oracle::brute_force_robust(big), ResourceError);
}

TEST(OracleLp, DualSetVertices) {
    const auto vertices = oracle::dual_set_vertices(EmpiricalSpace::uniform(4), 0.5);
    std::set<std::vector<double>> distinct(vertices.begin(), vertices.end());
    // Two states at their bound 1/2 each.
    EXPECT_EQ(distinct.size(), 6u);
    for (const auto& q : distinct) {
        double sum = 0.0;
        for (double v : q) {
            EXPECT_TRUE(v == 0.0 || v == 0.5);
            sum += v;
        }
        EXPECT_DOUBLE_EQ(sum, 1.0);
    }
    EXPECT_THROW(oracle::dual_set_vertices(EmpiricalSpace::uniform(7), 0.5), ResourceError);
    EXPECT_THROW(oracle::dual_set_vertices(EmpiricalSpace::uniform(3), 1.0), DomainError);
}

TEST(OracleLp, HandExampleAndAlphaNearOne) {
    const auto half = EmpiricalSpace::uniform(2);
    const std::vector<PolicyHolder> one{{Distortion::power(0.5), LossProfile({0.0, 10.0})}};
    EXPECT_NEAR(oracle::brute_force_lp(half, one, 0.5), 10.0 * std::sqrt(0.5), 1e-12);
    // Q = P: min{P(X > 0), sqrt(P(X > 0))} = 1/2.
    EXPECT_NEAR(oracle::brute_force_lp(half, one, 1.0 - 1e-12), 5.0, 1e-9);
}

TEST(OracleLp, DominatesRandomFeasibleMeasures) {
    // Sampled points of the dual set never beat the enumerated maximum, which
    // guards the kink-vertex enumeration itself.
    std::mt19937_64 rng(502);
    std::uniform_real_distribution<double> u(0.0, 1.0), a(0.1, 0.9);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t states = 1 + rng() % 5;
        const auto p = gen::random_space(rng, states);
        const auto holders = gen::random_holders(rng, states, 1 + rng() % 3);
        const double alpha = a(rng);
        const double best = oracle::brute_force_lp(p, holders, alpha);
        for (int k = 0; k < 300; ++k) {
            // Random convex combination of two dual vertices stays feasible.
            const auto vs = oracle::dual_set_vertices(p, alpha);
            const auto& v1 = vs[rng() % vs.size()];
            const auto& v2 = vs[rng() % vs.size()];
            const double t = u(rng);
            std::vector<double> q(states);
            for (std::size_t w = 0; w < states; ++w) q[w] = t * v1[w] + (1.0 - t) * v2[w];
            EXPECT_LE(measure_objective(p, holders, q), best + 1e-9);
        }
    }
}

TEST(OracleLp, FullSupportLayerUsesExactMass) {
    // These weights sum to 1 - ulp, and Prelec-2 with a small alpha sits far below 1
    // there, so the layer [0, min X] must be priced at T(1) = 1.
    const EmpiricalSpace p({0.13946074968168237, 0.18473852322400755, 0.26228407639521051, 0.32644837809421329,
                            0.087068272604886046});
    const std::vector<PolicyHolder> holders{{Distortion::power(0.854014), LossProfile({1, 1, 9, 4, 0})},
                                            {Distortion::prelec2(0.616963, 0.572058), LossProfile({0, 7, 0, 3, 2})},
                                            {Distortion::prelec2(0.078279, 1.917608), LossProfile({6, 5, 5, 7, 2})}};
    const double alpha = 0.59255833473983732;
    EXPECT_NEAR(oracle::brute_force_lp(p, holders, alpha), solve_measure_lp(p, holders, alpha).value, 1e-9);
}
