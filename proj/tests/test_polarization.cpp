// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "ccp/polarization.hpp"

namespace ccp {
namespace {

constexpr double kTol = 1e-12;

TEST(TagAngle, NormalizesIntoHalfOpenRange) {
    EXPECT_NEAR(TagAngle(3.0 * kPi).radians(), -kPi, 1e-12);
    EXPECT_NEAR(TagAngle(-kPi).radians(), -kPi, 1e-12);
    EXPECT_NEAR(TagAngle(kPi / 2).radians(), kPi / 2, 1e-15);
    EXPECT_LT(TagAngle(kPi).radians(), kPi);
}

TEST(MakeLinear, AxisIdentities) {
    const JonesVector h = make_linear(TagAngle(0.0));
    EXPECT_NEAR(h.h.real(), 1.0, kTol);
    EXPECT_NEAR(std::abs(h.v), 0.0, kTol);
    const JonesVector v = make_linear(TagAngle(kPi / 2));
    EXPECT_NEAR(std::abs(v.h), 0.0, kTol);
    EXPECT_NEAR(v.v.real(), 1.0, kTol);
    const JonesVector t30 = make_linear(TagAngle(kPi / 6));
    EXPECT_NEAR(t30.h.real(), 0.8660254037844386, 1e-12);
    EXPECT_NEAR(t30.v.real(), 0.5, 1e-12);
}

TEST(MakeRhcp, ComponentsAndNorm) {
    const JonesVector r = make_rhcp();
    EXPECT_NEAR(r.h.real(), 0.7071067811865476, kTol);
    EXPECT_NEAR(r.h.imag(), 0.0, kTol);
    EXPECT_NEAR(r.v.real(), 0.0, kTol);
    EXPECT_NEAR(r.v.imag(), -0.7071067811865476, kTol);
    EXPECT_NEAR(r.norm_squared(), 1.0, kTol);
}

TEST(Project, CrossPolarizationIdentity) {
    EXPECT_LT(std::abs(project(make_rhcp(), make_rhcp(), false)), 1e-12);
    EXPECT_NEAR(std::abs(project(make_linear(TagAngle(0)), make_linear(TagAngle(kPi / 2)), false)), 0.0, kTol);
}

TEST(TagCoupling, Examples) {
    EXPECT_NEAR(std::abs(tag_coupling(make_rhcp(), TagAngle(0.0)) - Complex(0.7071067811865476, 0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(tag_coupling(make_linear(TagAngle(kPi / 6)), TagAngle(kPi / 6)) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(tag_coupling(make_linear(TagAngle(0)), TagAngle(kPi / 2))), 0.0, 1e-12);
}

TEST(BackscatterFactor, CircularExamples) {
    const JonesVector r = make_rhcp();
    EXPECT_NEAR(std::abs(backscatter_factor(r, r, TagAngle(0)) - Complex(0.5, 0.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(backscatter_factor(r, r, TagAngle(kPi / 4)) - std::polar(0.5, -kPi / 2)), 0.0, 1e-12);
    const double d = std::arg(backscatter_factor(r, r, TagAngle(kPi / 2))) - std::arg(backscatter_factor(r, r, TagAngle(0)));
    EXPECT_NEAR(std::abs(wrap_angle(d)), kPi, 1e-9);
}

TEST(BackscatterFactor, MatchedLinearIsUnity) {
    for (double t : {0.0, 0.3, 1.2, -2.0}) {
        const JonesVector lp = make_linear(TagAngle(t));
        EXPECT_NEAR(std::abs(backscatter_factor(lp, lp, TagAngle(t)) - 1.0), 0.0, 1e-12);
    }
}

// Property checks over random angles.
class PolarizationProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{12345};
    std::uniform_real_distribution<double> angle{-4.0 * kPi, 4.0 * kPi};
};

TEST_F(PolarizationProperties, LinearStatesAreRealUnitVectors) {
    for (int i = 0; i < 500; ++i) {
        const JonesVector j = make_linear(TagAngle(angle(rng)));
        EXPECT_NEAR(j.norm_squared(), 1.0, kTol);
        EXPECT_NEAR(j.h.imag(), 0.0, kTol);
        EXPECT_NEAR(j.v.imag(), 0.0, kTol);
        EXPECT_NEAR(std::abs(project(j, j, false) - 1.0), 0.0, kTol);
    }
}

TEST_F(PolarizationProperties, CircularLinkHasConstantMagnitudeAndDoubledPhase) {
    const JonesVector r = make_rhcp();
    for (int i = 0; i < 500; ++i) {
        const double a = angle(rng), b = angle(rng);
        const Complex fa = backscatter_factor(r, r, TagAngle(a));
        const Complex fb = backscatter_factor(r, r, TagAngle(b));
        EXPECT_NEAR(std::abs(fa), 0.5, kTol);
        EXPECT_NEAR(std::abs(tag_coupling(r, TagAngle(a))), 1.0 / std::sqrt(2.0), kTol);
        EXPECT_NEAR(wrap_angle(std::arg(fa) - std::arg(fb) + 2.0 * (a - b)), 0.0, 1e-9);
    }
}

TEST_F(PolarizationProperties, LinearLinkIsRealCosSquared) {
    for (int i = 0; i < 500; ++i) {
        const double t = angle(rng), phi = angle(rng);
        const JonesVector lp = make_linear(TagAngle(phi));
        const Complex f = backscatter_factor(lp, lp, TagAngle(t));
        EXPECT_NEAR(f.imag(), 0.0, 1e-12);
        EXPECT_NEAR(f.real(), std::pow(std::cos(t - phi), 2), 1e-12);
        EXPECT_NEAR(std::abs(tag_coupling(lp, TagAngle(t)) - std::cos(t - phi)), 0.0, 1e-12);
    }
}

TEST(ResonantPatch, CircularAtCentreEllipticalOffBand) {
    const ResonantPatch patch{915e6, 20.0};
    const JonesVector c = patch.at(915e6);
    EXPECT_NEAR(c.norm_squared(), 1.0, 1e-12);
    // Same state as RHCP up to a common phase.
    EXPECT_NEAR(std::abs(project(c, make_rhcp(), true)), 1.0, 1e-12);
    const JonesVector low = patch.at(763e6);
    EXPECT_LT(low.norm_squared(), 0.1);
    EXPECT_LT(std::abs(project(low.normalized(), make_rhcp(), true)), 0.95);
}

}  // namespace
}  // namespace ccp
