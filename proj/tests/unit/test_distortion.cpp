#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "paretopool/distortion.hpp"

using namespace paretopool;

namespace {

const double kInvE = std::exp(-1.0);

// Independent finite-difference estimate of -T''/T' straight from eval.
template <class F>
double fd_pra(F&& f, double t, double h = 1e-4) {
    const double lo = f(t - h), mid = f(t), hi = f(t + h);
    return -((hi - 2.0 * mid + lo) / (h * h)) / ((hi - lo) / (2.0 * h));
}

bool has_issue(const std::vector<ValidationIssue>& issues, ValidationIssue::Kind kind) {
    for (const auto& i : issues)
        if (i.kind == kind) return true;
    return false;
}

}  // namespace

// ============================================================================
// eval
// ============================================================================

TEST(DistortionEval, PrelecInflectionPointIsFixed) {
    EXPECT_NEAR(Distortion::prelec1(0.5)(kInvE), kInvE, 1e-15);
    EXPECT_NEAR(Distortion::prelec1(0.123)(kInvE), kInvE, 1e-15);
}

TEST(DistortionEval, BoundaryNormalization) {
    for (const auto& d : {Distortion::identity(), Distortion::power(0.3), Distortion::prelec1(0.6),
                          Distortion::prelec2(0.5, 1.7), Distortion::kahneman_tversky(0.5), Distortion::tvar(0.15),
                          Distortion::tabulated({{0, 0}, {0.3, 0.6}, {1, 1}})}) {
        EXPECT_EQ(d(0.0), 0.0) << d.describe();
        EXPECT_NEAR(d(1.0), 1.0, 1e-15) << d.describe();
    }
}

TEST(DistortionEval, PowerSquareRoot) { EXPECT_DOUBLE_EQ(Distortion::power(0.5)(0.25), 0.5); }

TEST(DistortionEval, TabulatedInterpolatesLinearly) {
    const auto d = Distortion::tabulated({{0, 0}, {0.5, 0.8}, {1, 1}});
    EXPECT_DOUBLE_EQ(d(0.25), 0.4);
    EXPECT_DOUBLE_EQ(d(0.75), 0.9);
}

TEST(DistortionEval, TvarIsCappedRamp) {
    const auto d = Distortion::tvar(0.2);
    EXPECT_DOUBLE_EQ(d(0.1), 0.5);
    EXPECT_DOUBLE_EQ(d(0.5), 1.0);
}

TEST(DistortionEval, ArgumentOutsideUnitIntervalThrows) {
    EXPECT_THROW(Distortion::power(0.5)(-0.1), DomainError);
    EXPECT_THROW(Distortion::power(0.5)(1.1), DomainError);
}

TEST(DistortionEval, FactoriesEnforceParameterDomains) {
    EXPECT_THROW(Distortion::power(0.0), DomainError);
    EXPECT_THROW(Distortion::prelec1(1.0), DomainError);
    EXPECT_THROW(Distortion::prelec2(0.5, -1.0), DomainError);
    EXPECT_THROW(Distortion::kahneman_tversky(0.279), DomainError);
    EXPECT_THROW(Distortion::kahneman_tversky(1.01), DomainError);
    EXPECT_NO_THROW(Distortion::kahneman_tversky(1.0));
    EXPECT_THROW(Distortion::tvar(1.0), DomainError);
    EXPECT_THROW(Distortion::tabulated({{0, 0}, {0.5, 0.7}, {1, 0.6}}), DomainError);
}

TEST(DistortionProperties, MonotoneOnRandomParameters) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Distortion ds[] = {Distortion::power(0.05 + 3.0 * u(rng)), Distortion::prelec1(0.01 + 0.98 * u(rng)),
                                 Distortion::prelec2(0.01 + 0.98 * u(rng), 0.1 + 3.0 * u(rng)),
                                 Distortion::kahneman_tversky(0.28 + 0.72 * u(rng))};
        for (const auto& d : ds) {
            double s = u(rng), t = u(rng);
            if (s > t) std::swap(s, t);
            EXPECT_LE(d(s), d(t) + 1e-15) << d.describe() << " s=" << s << " t=" << t;
        }
    }
}

// ============================================================================
// pra / rpra
// ============================================================================

TEST(DistortionPra, PrelecVanishesAtInflection) {
    EXPECT_NEAR(pra(Distortion::prelec1(0.7), kInvE), 0.0, 1e-12);
    EXPECT_NEAR(rpra(Distortion::prelec1(0.5), kInvE), 0.0, 1e-12);
}

TEST(DistortionPra, PowerHandDerivative) {
    // PRA = (1 - gamma) / t
    EXPECT_NEAR(pra(Distortion::power(0.4), 0.5), 1.2, 1e-15);
}

TEST(DistortionPra, PowerRelativeIndexIsConstant) {
    for (double t : {0.01, 0.2, 0.5, 0.93}) {
        EXPECT_NEAR(rpra(Distortion::power(0.40), t), 0.60, 1e-14);
        EXPECT_EQ(rpra(Distortion::power(1.0), t), 0.0);
    }
}

TEST(DistortionPra, PrelecSmallerAlphaMoreAverseInTail) {
    EXPECT_GT(pra(Distortion::prelec1(0.3), 0.1), pra(Distortion::prelec1(0.9), 0.1));
}

TEST(DistortionPra, ErrorsForUnsupportedInputs) {
    EXPECT_THROW(pra(Distortion::tabulated({{0, 0}, {1, 1}}), 0.5), UnsupportedError);
    EXPECT_THROW(pra(Distortion::tvar(0.2), 0.5), SingularityError);
    EXPECT_DOUBLE_EQ(pra(Distortion::tvar(0.2), 0.1), 0.0);
    EXPECT_THROW(pra(Distortion::power(0.5), 0.0), DomainError);
    EXPECT_THROW(pra(Distortion::power(0.5), 1.0), DomainError);
}

TEST(DistortionProperties, ClosedFormPraMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = 0.05 + 0.9 * u(rng);
        const Distortion ds[] = {Distortion::identity(), Distortion::power(0.1 + 2.0 * u(rng)),
                                 Distortion::prelec1(0.05 + 0.9 * u(rng)),
                                 Distortion::prelec2(0.05 + 0.9 * u(rng), 0.2 + 2.0 * u(rng))};
        for (const auto& d : ds) {
            const double expected = fd_pra([&](double x) { return d(x); }, t);
            EXPECT_NEAR(pra(d, t), expected, 1e-4 * std::max(std::abs(expected), 1.0)) << d.describe() << " t=" << t;
        }
    }
}

TEST(DistortionProperties, KtFiniteDifferencePraIsStable) {
    // The fixed 1e-6 stencil still agrees with a coarser independent estimate.
    for (double g : {0.4, 0.61, 0.9}) {
        const auto d = Distortion::kahneman_tversky(g);
        for (double t : {0.02, 0.2, 0.5, 0.8}) {
            const double expected = fd_pra([&](double x) { return d(x); }, t, 1e-4);
            EXPECT_NEAR(pra(d, t), expected, 2e-3 * std::max(std::abs(expected), 1.0)) << g << " " << t;
        }
    }
}

TEST(DistortionProperties, Prelec1PraDecreasesInAlphaBelowInverseE) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        double a1 = 0.01 + 0.98 * u(rng), a2 = 0.01 + 0.98 * u(rng);
        if (a1 > a2) std::swap(a1, a2);
        if (a2 - a1 < 1e-6) continue;
        const double t = kInvE * (0.001 + 0.998 * u(rng));
        EXPECT_GT(pra(Distortion::prelec1(a1), t), pra(Distortion::prelec1(a2), t)) << a1 << " " << a2 << " " << t;
    }
}

TEST(DistortionProperties, Prelec2PraDecreasesInBeta) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const double a = 0.01 + 0.98 * u(rng);
        double b1 = 0.05 + 3.0 * u(rng), b2 = 0.05 + 3.0 * u(rng);
        if (b1 > b2) std::swap(b1, b2);
        if (b2 - b1 < 1e-6) continue;
        const double t = 0.001 + 0.998 * u(rng);
        EXPECT_GT(pra(Distortion::prelec2(a, b1), t), pra(Distortion::prelec2(a, b2), t));
    }
}

TEST(DistortionProperties, ConcaveTransformRaisesPra) {
    // T2 = sqrt(T1): PRA2 = PRA1 + T1' / (2 T1) >= PRA1.
    for (const auto& d : {Distortion::power(0.7), Distortion::prelec1(0.4), Distortion::prelec2(0.6, 1.3),
                          Distortion::kahneman_tversky(0.55)}) {
        for (double t = 0.05; t < 0.95; t += 0.05) {
            const double composite = fd_pra([&](double x) { return std::sqrt(d(x)); }, t);
            EXPECT_GE(composite, fd_pra([&](double x) { return d(x); }, t)) << d.describe() << " t=" << t;
        }
    }
}

TEST(DistortionProperties, KtSmallerGammaMoreAverseNearZero) {
    const double gammas[] = {0.3, 0.4, 0.5, 0.7, 0.9};
    for (std::size_t a = 0; a + 1 < std::size(gammas); ++a) {
        const auto lo = Distortion::kahneman_tversky(gammas[a]);
        const auto hi = Distortion::kahneman_tversky(gammas[a + 1]);
        for (double t = 0.001; t < 0.05; t += 0.001) EXPECT_GT(pra(lo, t), pra(hi, t)) << gammas[a] << " t=" << t;

        // Record where the ordering first flips; no particular value is asserted.
        double crossing = std::nan("");
        for (double t = 0.05; t < 0.999; t += 0.001)
            if (pra(lo, t) <= pra(hi, t)) {
                crossing = t;
                break;
            }
        RecordProperty("kt_pra_crossing_" + std::to_string(a), std::to_string(crossing));
    }
}

// ============================================================================
// validate
// ============================================================================

TEST(DistortionValidate, InDomainPrelec2IsValid) { EXPECT_TRUE(validate(Distortion::prelec2(0.5, 1.0)).empty()); }

TEST(DistortionValidate, ReportsParameterRange) {
    const auto issues = validate(Distortion::unchecked(Family::Prelec1, {1.5}));
    ASSERT_FALSE(issues.empty());
    EXPECT_TRUE(has_issue(issues, ValidationIssue::Kind::ParameterRange));
}

TEST(DistortionValidate, ReportsTabulatedMonotonicity) {
    const auto issues = validate(Distortion::unchecked(Family::Tabulated, {}, {{0, 0}, {0.5, 0.7}, {1, 0.6}}));
    EXPECT_TRUE(has_issue(issues, ValidationIssue::Kind::Monotonicity));
}

TEST(DistortionValidate, ReportsBoundaryAndKnotShape) {
    EXPECT_TRUE(has_issue(validate(Distortion::unchecked(Family::Tabulated, {}, {{0, 0}, {0.5, 0.7}})),
                          ValidationIssue::Kind::Knots));
    EXPECT_TRUE(has_issue(validate(Distortion::unchecked(Family::Tabulated, {}, {{0, 0.1}, {1, 1}})),
                          ValidationIssue::Kind::Boundary));
    EXPECT_TRUE(has_issue(validate(Distortion::unchecked(Family::Power, {})), ValidationIssue::Kind::ParameterRange));
}

TEST(DistortionValidate, KtBelowThresholdFlagged) {
    EXPECT_FALSE(validate(Distortion::unchecked(Family::KahnemanTversky, {0.2})).empty());
}

TEST(DistortionSetTest, RejectsEmptyAndInvalid) {
    EXPECT_THROW(DistortionSet(std::vector<Distortion>{}), DomainError);
    EXPECT_THROW(DistortionSet({Distortion::unchecked(Family::Prelec1, {2.0})}), DomainError);
    const DistortionSet s{Distortion::power(0.5), Distortion::power(0.8)};
    EXPECT_EQ(s.size(), 2u);
    EXPECT_FALSE(s.is_singleton());
}

TEST(DistortionNames, RoundTrip) {
    for (auto f : {Family::Identity, Family::Power, Family::Prelec1, Family::Prelec2, Family::KahnemanTversky,
                   Family::Tvar, Family::Tabulated})
        EXPECT_EQ(family_from_string(to_string(f)), f);
    EXPECT_THROW(family_from_string("cubic"), DomainError);
}
