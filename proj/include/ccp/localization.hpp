// SPDX-License-Identifier: Apache-2.0
//
// Measurement selection over a 3x3x3 partition of the pose bounding box and
// robust trilateration.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccp/common.hpp"
#include "ccp/random.hpp"

namespace ccp {

struct RangingMeasurement {
    Vec3 pose_position = Vec3::Zero();
    double distance = 0.0;
    double snr_db = kUnreadSnrDb;
};

struct LocationEstimate {
    Vec3 position = Vec3::Zero();
    double residual_rms = 0.0;
    std::size_t used_measurements = 0;
    bool converged = false;
};

/// Keeps measurements with snr >= tau, in order.
inline std::vector<RangingMeasurement> filter_measurements(const std::vector<RangingMeasurement>& ms, double tau_db) {
    std::vector<RangingMeasurement> out;
    std::copy_if(ms.begin(), ms.end(), std::back_inserter(out),
                 [tau_db](const RangingMeasurement& m) { return m.snr_db >= tau_db; });
    return out;
}

namespace detail {

/// Cell along one axis; points on an interior boundary go to the lower cell
/// and a zero-width axis collapses to cell 0.
inline int grid_cell(double x, double lo, double hi) {
    const double w = hi - lo;
    if (!(w > 1e-12)) return 0;
    const double t = (x - lo) / w * 3.0;
    return std::clamp(static_cast<int>(std::ceil(t)) - 1, 0, 2);
}

}  // namespace detail

/// Best-SNR measurement from each occupied cell of a 3x3x3 grid over the
/// pose bounding box. Ties go to the earliest index. Output keeps input
/// order and always contains the global best-SNR measurement.
inline std::vector<RangingMeasurement> grid_select(const std::vector<RangingMeasurement>& ms) {
    if (ms.empty()) return {};
    Vec3 lo = ms.front().pose_position, hi = lo;
    for (const auto& m : ms) {
        lo = lo.cwiseMin(m.pose_position);
        hi = hi.cwiseMax(m.pose_position);
    }
    std::array<int, 27> best;
    best.fill(-1);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const Vec3& p = ms[i].pose_position;
        const int cell = detail::grid_cell(p.x(), lo.x(), hi.x()) * 9 + detail::grid_cell(p.y(), lo.y(), hi.y()) * 3 +
                         detail::grid_cell(p.z(), lo.z(), hi.z());
        int& b = best[static_cast<std::size_t>(cell)];
        if (b < 0 || ms[i].snr_db > ms[static_cast<std::size_t>(b)].snr_db) b = static_cast<int>(i);
    }
    std::vector<bool> keep(ms.size(), false);
    bool any_empty = false;
    for (int b : best) {
        if (b < 0)
            any_empty = true;
        else
            keep[static_cast<std::size_t>(b)] = true;
    }
    if (any_empty) {
        const auto top = std::max_element(ms.begin(), ms.end(), [](const auto& a, const auto& b) {
            return a.snr_db < b.snr_db;
        });
        keep[static_cast<std::size_t>(top - ms.begin())] = true;
    }
    std::vector<RangingMeasurement> out;
    for (std::size_t i = 0; i < ms.size(); ++i)
        if (keep[i]) out.push_back(ms[i]);
    return out;
}

struct TrilaterationOptions {
    int max_iterations = 100;
    double step_tolerance_m = 1e-6;
    double outlier_mad_factor = 3.0;
    double outlier_floor_m = 0.15;
    int max_rejection_rounds = 3;
};

/// Centroid of the poses pushed out by the mean range along `look`.
inline Vec3 initial_guess(const std::vector<RangingMeasurement>& ms, const Vec3& look) {
    Vec3 c = Vec3::Zero();
    double mean_d = 0.0;
    for (const auto& m : ms) {
        c += m.pose_position;
        mean_d += m.distance;
    }
    const double n = static_cast<double>(ms.size());
    const double ln = look.norm();
    const Vec3 dir = ln > 0.0 ? Vec3(look / ln) : Vec3::Zero();
    return c / n + dir * (mean_d / n);
}

namespace detail {

inline void check_geometry(const std::vector<RangingMeasurement>& ms) {
    Vec3 mean = Vec3::Zero();
    for (const auto& m : ms) mean += m.pose_position;
    mean /= static_cast<double>(ms.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& m : ms) {
        const Vec3 d = m.pose_position - mean;
        scatter += d * d.transpose();
    }
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(scatter).eigenvalues();
    // Collinear (or coincident) poses leave two directions unobservable.
    if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-12)) || ev(2) <= 1e-18)
        throw DegenerateGeometry("measurement poses are collinear");
}

inline double cost(const std::vector<RangingMeasurement>& ms, const Vec3& x) {
    double c = 0.0;
    for (const auto& m : ms) {
        const double r = (x - m.pose_position).norm() - m.distance;
        c += r * r;
    }
    return c;
}

struct Fit {
    Vec3 x;
    bool converged = false;
};

/// Levenberg-Marquardt on sum (|x - p_i| - d_i)^2.
inline Fit solve_ranges(const std::vector<RangingMeasurement>& ms, Vec3 x, const TrilaterationOptions& opt) {
    double lambda = 1e-3;
    double c = cost(ms, x);
    for (int it = 0; it < opt.max_iterations; ++it) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (const auto& m : ms) {
            Vec3 u = x - m.pose_position;
            const double n = u.norm();
            if (n < 1e-12) continue;
            u /= n;
            const double r = n - m.distance;
            jtj += u * u.transpose();
            jtr += u * r;
        }
        bool accepted = false;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += lambda * (jtj.diagonal().array() + 1e-9).matrix();
            const Vec3 step = -a.ldlt().solve(jtr);
            const Vec3 cand = x + step;
            const double cc = cost(ms, cand);
            if (cc <= c) {
                accepted = true;
                x = cand;
                c = cc;
                lambda = std::max(lambda / 10.0, 1e-12);
                if (step.norm() < opt.step_tolerance_m) return {x, true};
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) return {x, true};  // no descent direction left: stationary point
    }
    return {x, false};
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Range-only least squares followed by up to max_rejection_rounds of
/// residual-based outlier removal (|r| > max(k*MAD, floor)).
inline LocationEstimate trilaterate(const std::vector<RangingMeasurement>& selected, const Vec3& init,
                                    const TrilaterationOptions& opt = {}) {
    if (selected.size() < 4) throw InsufficientData("trilateration needs at least 4 measurements");
    detail::check_geometry(selected);

    std::vector<RangingMeasurement> active = selected;
    detail::Fit fit = detail::solve_ranges(active, init, opt);
    for (int round = 0; round < opt.max_rejection_rounds; ++round) {
        std::vector<double> res;
        res.reserve(active.size());
        for (const auto& m : active) res.push_back((fit.x - m.pose_position).norm() - m.distance);
        const double med = detail::median(res);
        std::vector<double> dev;
        for (double r : res) dev.push_back(std::abs(r - med));
        const double threshold = std::max(opt.outlier_mad_factor * detail::median(dev), opt.outlier_floor_m);
        // Drop only the worst offender per round; one gross error inflates
        // every residual of the first fit.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < res.size(); ++i)
            if (std::abs(res[i]) > std::abs(res[worst])) worst = i;
        if (std::abs(res[worst]) <= threshold) break;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
        if (active.size() < 4) {
            LocationEstimate e;
            e.position = fit.x;
            e.used_measurements = active.size();
            e.converged = false;
            e.residual_rms = std::sqrt(detail::cost(active, fit.x) / std::max<std::size_t>(active.size(), 1));
            return e;
        }
        fit = detail::solve_ranges(active, fit.x, opt);
    }
    LocationEstimate e;
    e.position = fit.x;
    e.used_measurements = active.size();
    e.converged = fit.converged;
    e.residual_rms = std::sqrt(detail::cost(active, fit.x) / static_cast<double>(active.size()));
    return e;
}

enum class SelectionMode { grid, random, all };

struct LocalizeOptions {
    double tau_db = 4.0;
    SelectionMode selection = SelectionMode::grid;
    /// Subset size for random selection; 0 means "same size as grid".
    std::size_t random_size = 0;
    std::uint64_t random_seed = 0;
    Vec3 look_direction = Vec3::UnitY();
    TrilaterationOptions trilateration;
};

struct LocalizationOutcome {
    std::optional<LocationEstimate> estimate;
    /// Empty when localized; otherwise filtered, insufficient, degenerate
    /// or diverged.
    std::string reason;

    [[nodiscard]] bool localized() const { return estimate.has_value() && reason.empty(); }
};

inline std::vector<RangingMeasurement> random_select(const std::vector<RangingMeasurement>& ms, std::size_t k,
                                                     RandomStream& rng) {
    std::vector<std::size_t> idx(ms.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    k = std::min(k, ms.size());
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(ms.size() - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<RangingMeasurement> out;
    for (std::size_t i : idx) out.push_back(ms[i]);
    return out;
}

inline LocalizationOutcome localize_tag(const std::vector<RangingMeasurement>& ms, const LocalizeOptions& opt,
                                        std::uint64_t tag_key = 0) {
    LocalizationOutcome out;
    const auto filtered = filter_measurements(ms, opt.tau_db);
    if (filtered.empty()) {
        out.reason = ms.empty() ? "insufficient" : "filtered";
        return out;
    }
    std::vector<RangingMeasurement> chosen;
    switch (opt.selection) {
        case SelectionMode::grid: chosen = grid_select(filtered); break;
        case SelectionMode::all: chosen = filtered; break;
        case SelectionMode::random: {
            RandomStream rng(derive_seed(opt.random_seed, {tag_key}));
            const std::size_t k = opt.random_size ? opt.random_size : grid_select(filtered).size();
            chosen = random_select(filtered, k, rng);
            break;
        }
    }
    if (chosen.size() < 4) {
        out.reason = "insufficient";
        return out;
    }
    try {
        out.estimate = trilaterate(chosen, initial_guess(chosen, opt.look_direction), opt.trilateration);
        if (!out.estimate->converged) out.reason = "diverged";
    } catch (const DegenerateGeometry&) {
        out.reason = "degenerate";
    }
    return out;
}

/// Full per-tag pipeline: filter, select, trilaterate.
inline std::map<std::string, LocalizationOutcome> localize_all(
    const std::map<std::string, std::vector<RangingMeasurement>>& per_tag, const LocalizeOptions& opt) {
    std::map<std::string, LocalizationOutcome> out;
    std::uint64_t key = 0;
    for (const auto& [id, ms] : per_tag) out.emplace(id, localize_tag(ms, opt, key++));
    return out;
}

}  // namespace ccp
