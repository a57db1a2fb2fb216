// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "ccp/localization.hpp"

namespace ccp {
namespace {

RangingMeasurement m(Vec3 p, double d, double snr = 20.0) { return {p, d, snr}; }

std::vector<RangingMeasurement> exact(const std::vector<Vec3>& poses, const Vec3& target) {
    std::vector<RangingMeasurement> out;
    for (const auto& p : poses) out.push_back(m(p, (p - target).norm()));
    return out;
}

TEST(FilterMeasurements, ThresholdKeepsEquality) {
    const std::vector<RangingMeasurement> ms{m({0, 0, 0}, 1, 3.9), m({1, 0, 0}, 1, 4.0), m({2, 0, 0}, 1, 40.0)};
    const auto out = filter_measurements(ms, 4.0);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].snr_db, 4.0);
    EXPECT_EQ(out[1].snr_db, 40.0);
    EXPECT_EQ(filter_measurements(ms, -31.0).size(), 3u);
    EXPECT_TRUE(filter_measurements({}, 4.0).empty());
}

TEST(GridSelect, DegenerateBoxSingleCell) {
    const std::vector<RangingMeasurement> ms{m({1, 1, 1}, 1, 7), m({1, 1, 1}, 2, 9), m({1, 1, 1}, 3, 9)};
    const auto out = grid_select(ms);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].distance, 2.0);
}

TEST(GridSelect, OnePerCell) {
    std::vector<RangingMeasurement> ms;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            for (int z = 0; z < 3; ++z) ms.push_back(m({x + 0.5, y + 0.5, z + 0.5}, 1.0, x + y + z));
    // Stretch the box so the cell centres are not on boundaries.
    ms.push_back(m({0.0, 0.0, 0.0}, 1.0, -5));
    ms.push_back(m({3.0, 3.0, 3.0}, 1.0, -5));
    EXPECT_EQ(grid_select(ms).size(), 27u);
}

TEST(GridSelect, ArgmaxWithinCell) {
    const std::vector<RangingMeasurement> ms{m({0, 0, 0}, 1, 10), m({0.1, 0, 0}, 2, 12), m({3, 3, 3}, 3, 1)};
    const auto out = grid_select(ms);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].distance, 2.0);
    EXPECT_EQ(out[1].distance, 3.0);
}

TEST(GridSelect, BoundaryGoesToLowerCell) {
    // x = 1 is exactly the first interior boundary of [0, 3].
    const std::vector<RangingMeasurement> ms{m({0.5, 0, 0}, 1, 5), m({1.0, 0, 0}, 2, 6), m({3, 0, 0}, 3, 1)};
    const auto out = grid_select(ms);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].distance, 2.0);
}

TEST(GridSelect, SelectedIsBestInItsCellProperty) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 2.0), s(-10.0, 40.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RangingMeasurement> ms;
        for (int i = 0; i < 60; ++i) ms.push_back(m({u(rng), u(rng), u(rng)}, 1.0, s(rng)));
        const auto sel = grid_select(ms);
        EXPECT_LE(sel.size(), 27u);
        Vec3 lo = ms[0].pose_position, hi = lo;
        for (const auto& x : ms) lo = lo.cwiseMin(x.pose_position), hi = hi.cwiseMax(x.pose_position);
        auto cell = [&](const Vec3& p) {
            return detail::grid_cell(p.x(), lo.x(), hi.x()) * 9 + detail::grid_cell(p.y(), lo.y(), hi.y()) * 3 +
                   detail::grid_cell(p.z(), lo.z(), hi.z());
        };
        for (const auto& chosen : sel)
            for (const auto& other : ms)
                if (cell(other.pose_position) == cell(chosen.pose_position)) {
                    EXPECT_GE(chosen.snr_db, other.snr_db);
                }
    }
}

TEST(Trilaterate, ExactSystem) {
    const Vec3 target(0.3, 0.4, 0.5);
    const auto ms = exact({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, target);
    const LocationEstimate e = trilaterate(ms, Vec3(0.2, 0.2, 0.2));
    EXPECT_TRUE(e.converged);
    EXPECT_LT((e.position - target).norm(), 1e-6);
    EXPECT_EQ(e.used_measurements, 4u);
}

TEST(Trilaterate, OutlierRejectedMatchesOracleRefit) {
    const Vec3 target(0.3, 0.4, 0.5);
    const std::vector<Vec3> poses{{0, 0, 0},    {1, 0, 0},    {0, 1, 0},      {0, 0, 1},
                                  {1, 1, 0},    {1, 0, 1},    {0.5, 1, 1},    {1.2, 1.1, 0.9}};
    auto ms = exact(poses, target);
    ms[5].distance += 1.0;
    const LocationEstimate e = trilaterate(ms, Vec3(0.5, 0.5, 0.5));
    // Oracle: fit without the corrupted index.
    auto clean = ms;
    clean.erase(clean.begin() + 5);
    const LocationEstimate oracle = trilaterate(clean, Vec3(0.5, 0.5, 0.5));
    EXPECT_EQ(e.used_measurements, 7u);
    EXPECT_LT((e.position - oracle.position).norm(), 1e-6);
    EXPECT_LT((e.position - target).norm(), 0.01);
}

TEST(Trilaterate, Errors) {
    const auto three = exact({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {1, 1, 1});
    EXPECT_THROW(trilaterate(three, Vec3::Zero()), InsufficientData);
    const auto line = exact({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}}, {1, 1, 1});
    EXPECT_THROW(trilaterate(line, Vec3(1, 1, 0)), DegenerateGeometry);
}

TEST(Trilaterate, ExactnessProperty) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 target(u(rng), u(rng) + 4.0, u(rng));
        std::vector<Vec3> poses;
        for (int i = 0; i < 8; ++i) poses.push_back({u(rng), u(rng) * 0.5, u(rng)});
        const auto ms = exact(poses, target);
        const LocationEstimate e = trilaterate(ms, initial_guess(ms, Vec3::UnitY()));
        EXPECT_LT((e.position - target).norm(), 1e-6) << trial;
    }
}

TEST(Trilaterate, AddingRejectedOutlierDoesNotMoveEstimate) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    int rejected = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 target(u(rng), 3.0 + u(rng), u(rng));
        std::vector<Vec3> poses;
        for (int i = 0; i < 10; ++i) poses.push_back({u(rng), u(rng) * 0.4, u(rng)});
        auto ms = exact(poses, target);
        const Vec3 init = initial_guess(ms, Vec3::UnitY());
        const LocationEstimate base = trilaterate(ms, init);
        ms.push_back(m({u(rng), 0.0, u(rng)}, 0.0));
        ms.back().distance = (ms.back().pose_position - target).norm() + 1.5;
        const LocationEstimate with = trilaterate(ms, init);
        // Near-planar poses admit a mirror solution; the property only
        // constrains fits that actually drop the outlier.
        if (with.used_measurements != 10u) continue;
        ++rejected;
        EXPECT_LT((with.position - base.position).norm(), 1e-6) << trial;
    }
    EXPECT_GE(rejected, 45);
}

TEST(LocalizeAll, ReasonCodes) {
    std::map<std::string, std::vector<RangingMeasurement>> per_tag;
    per_tag["few"] = exact({{0, 0, 0}, {2, 0, 0}, {0, 0, 2}}, {1, 2, 1});
    per_tag["quiet"] = exact({{0, 0, 0}, {2, 0, 0}, {0, 0, 2}, {2, 0, 2}, {1, 0.5, 1}}, {1, 2, 1});
    for (auto& x : per_tag["quiet"]) x.snr_db = 1.0;
    std::vector<Vec3> poses;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) poses.push_back({i * 1.0, j * 0.3, k * 1.0});
    per_tag["good"] = exact(poses, {1.1, 2.5, 0.9});
    const auto out = localize_all(per_tag, LocalizeOptions{});
    EXPECT_EQ(out.at("few").reason, "insufficient");
    EXPECT_EQ(out.at("quiet").reason, "filtered");
    ASSERT_TRUE(out.at("good").localized());
    EXPECT_LT((out.at("good").estimate->position - Vec3(1.1, 2.5, 0.9)).norm(), 1e-6);
}

}  // namespace
}  // namespace ccp
