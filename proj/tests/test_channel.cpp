// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "ccp/channel.hpp"

namespace ccp {
namespace {

TagSpec tag_at(const Vec3& p, double roll, double sensitivity = -18.0) {
    TagSpec t;
    t.id = "t";
    t.position = p;
    t.roll = TagAngle(roll);
    t.sensitivity_dbm = sensitivity;
    return t;
}

// Friis oracle, written independently of free_space_path_loss_db.
double friis_db(double f, double d) {
    const double lambda = 299792458.0 / f;
    return 10.0 * std::log10(std::pow(4.0 * 3.141592653589793 * d / lambda, 2));
}

TEST(PathPhasor, Examples) {
    EXPECT_NEAR(std::abs(path_phasor(915e6, 0.0, 0.0) - Complex(1, 0)), 0.0, 1e-15);
    const double half_lambda = kSpeedOfLight / 915e6 / 2.0;
    EXPECT_NEAR(half_lambda, 0.16382, 1e-5);
    EXPECT_NEAR(std::abs(path_phasor(915e6, half_lambda, 0.0) - Complex(-1, 0)), 0.0, 1e-6);
    const double fspl = friis_db(915e6, 1.0);
    EXPECT_NEAR(fspl, 31.67, 0.01);
    EXPECT_NEAR(std::abs(path_phasor(915e6, 1.0, fspl)), 0.0261, 5e-5);
    EXPECT_THROW(path_phasor(915e6, -0.1, 0.0), DomainError);
}

TEST(TagPowered, CircularAndLinearBudgets) {
    const ReaderPose pose;
    const TagSpec tag = tag_at({0, 1, 0}, 0.7);
    const double expected_cp = 30.0 - friis_db(915e6, 1.0) - 3.0103;
    const PoweringResult cp = tag_powered(pose, tag, make_rhcp(), 30.0, 915e6);
    EXPECT_NEAR(cp.delivered_dbm, expected_cp, 1e-3);
    EXPECT_NEAR(cp.delivered_dbm, -4.7, 0.05);
    EXPECT_TRUE(cp.powered);

    const PoweringResult matched = tag_powered(pose, tag, make_linear(TagAngle(0.7)), 30.0, 915e6);
    EXPECT_NEAR(matched.delivered_dbm, -1.7, 0.05);

    const PoweringResult ortho = tag_powered(pose, tag, make_linear(TagAngle(0.7 + kPi / 2)), 30.0, 915e6);
    EXPECT_FALSE(ortho.powered);
    EXPECT_LT(ortho.delivered_dbm, -250.0);

    EXPECT_THROW(tag_powered(pose, tag_at({0, 0.005, 0}, 0), make_rhcp(), 30.0, 915e6), DomainError);
}

TEST(TagPowered, CircularPoweringIsRollIndependent) {
    const ReaderPose pose;
    const double ref = tag_powered(pose, tag_at({0, 2, 0}, 0.0), make_rhcp(), 30.0, 915e6).delivered_dbm;
    for (int deg = -180; deg < 180; deg += 7)
        EXPECT_NEAR(tag_powered(pose, tag_at({0, 2, 0}, deg_to_rad(deg)), make_rhcp(), 30.0, 915e6).delivered_dbm,
                    ref, 1e-9);
}

TEST(BackscatterChannel, SinglePathPhase) {
    const ReaderPose pose;
    const TagSpec tag = tag_at({0, 2, 0}, 0.0);
    const JonesVector h = make_linear(TagAngle(0));
    const Complex c = backscatter_channel(pose, tag, 915e6, h, h, {PathSpec{}});
    const double expected = wrap_angle(-2.0 * kPi * 915e6 * 4.0 / kSpeedOfLight);
    EXPECT_NEAR(wrap_angle(std::arg(c) - expected), 0.0, 1e-9);
    EXPECT_NEAR(amplitude_to_db(std::abs(c)), -2.0 * friis_db(915e6, 2.0), 1e-9);
}

TEST(BackscatterChannel, CircularRollFlipsSign) {
    const ReaderPose pose;
    const std::vector<PathSpec> paths{PathSpec{}};
    const Complex a = backscatter_channel(pose, tag_at({0, 2, 0}, 0.0), 915e6, make_rhcp(), make_rhcp(), paths);
    const Complex b = backscatter_channel(pose, tag_at({0, 2, 0}, kPi / 2), 915e6, make_rhcp(), make_rhcp(), paths);
    EXPECT_NEAR(std::abs(b + a), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(a), std::abs(b), 1e-15);
}

TEST(BackscatterChannel, TwoPathsSumOracle) {
    const ReaderPose pose;
    const TagSpec tag = tag_at({0, 1.5, 0}, 0.2);
    const JonesVector lp = make_linear(TagAngle(0.2));
    const std::vector<PathSpec> paths{PathSpec{}, PathSpec{1.0, 6.0, false}};
    const Complex got = backscatter_channel(pose, tag, 833e6, lp, lp, paths);
    // Hand-summed two-term oracle.
    auto term = [](double f, double one_way, double extra_db) {
        const double amp = std::pow(10.0, -(2.0 * friis_db(f, one_way) + extra_db) / 20.0);
        return std::polar(amp, -2.0 * 3.141592653589793 * f * 2.0 * one_way / 299792458.0);
    };
    const Complex expected = term(833e6, 1.5, 0.0) + term(833e6, 2.5, 6.0);
    EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-15);
    EXPECT_THROW(backscatter_channel(pose, tag, 833e6, lp, lp, {}), DomainError);
}

TEST(BackscatterChannel, CircularIsHalfOfMatchedLinear) {
    const ReaderPose pose;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-kPi, kPi), d(0.3, 4.0);
    for (int i = 0; i < 200; ++i) {
        const TagSpec tag = tag_at({0.2, d(rng), -0.1}, u(rng));
        const std::vector<PathSpec> paths{PathSpec{}, PathSpec{0.8, 9.0, false}};
        const JonesVector lp = make_linear(tag.roll);
        const Complex cp = backscatter_channel(pose, tag, 900e6, make_rhcp(), make_rhcp(), paths);
        const Complex ll = backscatter_channel(pose, tag, 900e6, lp, lp, paths);
        EXPECT_NEAR(std::abs(cp), 0.5 * std::abs(ll), 1e-15);
        // Swapping a matched pair leaves the magnitude alone.
        const JonesVector other = make_linear(TagAngle(tag.roll.radians() + 0.4));
        EXPECT_NEAR(std::abs(backscatter_channel(pose, tag, 900e6, lp, other, paths)),
                    std::abs(backscatter_channel(pose, tag, 900e6, other, lp, paths)), 1e-15);
    }
}

TEST(Environment, BlockingOnlyTouchesDirectPath) {
    Environment env;
    env.scatterers.push_back({{1.0, 1.0, 0.0}, 8.0});
    TagSpec tag = tag_at({0, 2, 0}, 0.0);
    const ReaderPose pose;
    const auto los = env.paths_for(pose, tag);
    tag.blocked_loss_db = 10.0;
    const auto nlos = env.paths_for(pose, tag);
    ASSERT_EQ(los.size(), 2u);
    EXPECT_EQ(los[0].excess_length, 0.0);
    EXPECT_GT(los[1].excess_length, 0.0);
    EXPECT_TRUE(nlos[0].blocked);
    EXPECT_DOUBLE_EQ(nlos[0].attenuation_db, 20.0);
    EXPECT_DOUBLE_EQ(nlos[1].attenuation_db, los[1].attenuation_db);
    EXPECT_DOUBLE_EQ(nlos[1].excess_length, los[1].excess_length);
}

TEST(ResidualSelfInterference, Isolations) {
    const InterferenceModel m = InterferenceModel::with_default_nulling();
    EXPECT_NEAR(std::abs(residual_self_interference(m, 900e6, AntennaPair::circular, LeakageScheme::crosspol)),
                std::pow(10.0, -45.0 / 20.0), 1e-15);
    EXPECT_NEAR(std::abs(residual_self_interference(m, 900e6, AntennaPair::circular, LeakageScheme::raw)), 0.089,
                5e-4);
    EXPECT_DOUBLE_EQ(m.isolation_db(915e6, AntennaPair::vertical, LeakageScheme::nulled), 49.0);
    EXPECT_DOUBLE_EQ(m.isolation_db(915e6, AntennaPair::horizontal, LeakageScheme::nulled), 46.0);
    EXPECT_THROW(m.isolation_db(900e6, AntennaPair::vertical, LeakageScheme::nulled), ConfigError);
    EXPECT_THROW(m.isolation_db(900e6, AntennaPair::vertical, LeakageScheme::crosspol), ConfigError);
}

TEST(ResidualSelfInterference, NulledIsolationFloorOverTable) {
    const InterferenceModel m = InterferenceModel::with_default_nulling();
    double worst = 1e9;
    for (const auto& [f, e] : m.nulling) {
        (void)e;
        for (AntennaPair p : {AntennaPair::vertical, AntennaPair::horizontal})
            worst = std::min(worst, m.isolation_db(f, p, LeakageScheme::nulled));
    }
    EXPECT_GE(worst, 36.0);
    EXPECT_DOUBLE_EQ(worst, 36.0);  // 763 MHz vertical
}

TEST(AddNoise, SnrDefinitionAndDeterminism) {
    RandomStream a(7), b(7);
    const NoiseContext ctx{0.1, kNegInf, kPosInf};
    const NoisySample s1 = add_noise(Complex(1, 0), ctx, a);
    const NoisySample s2 = add_noise(Complex(1, 0), ctx, b);
    EXPECT_NEAR(s1.snr_db, 20.0, 1e-12);
    EXPECT_EQ(s1.value, s2.value);
    EXPECT_EQ(a.draws(), 2u);

    RandomStream c(7);
    const NoisySample clean = add_noise(Complex(0.3, 0.4), NoiseContext{}, c);
    EXPECT_EQ(clean.value, Complex(0.3, 0.4));
    EXPECT_EQ(clean.snr_db, kPosInf);
    EXPECT_EQ(c.draws(), 2u);

    RandomStream d(7);
    EXPECT_THROW(add_noise(Complex(1, 0), NoiseContext{-1.0, kNegInf, kPosInf}, d), ConfigError);
}

TEST(AddNoise, SaturationPenaltyIsMonotone) {
    // Two-point oracle: below the ceiling no penalty; above it sigma grows
    // by exactly the dB excess.
    const NoiseContext below{0.01, -20.0, -10.0};
    const NoiseContext above{0.01, -4.0, -10.0};
    EXPECT_DOUBLE_EQ(below.effective_sigma(), 0.01);
    EXPECT_NEAR(amplitude_to_db(above.effective_sigma() / 0.01), 6.0, 1e-12);
    RandomStream r(1);
    EXPECT_NEAR(add_noise(Complex(1, 0), below, r).snr_db - add_noise(Complex(1, 0), above, r).snr_db, 6.0, 1e-12);
}

}  // namespace
}  // namespace ccp
