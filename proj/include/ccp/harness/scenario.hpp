// SPDX-License-Identifier: Apache-2.0
//
// Scene realization: tag layouts, reflectors, reader trajectories and the
// pose-tracking error applied on top of them.

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "ccp/harness/config.hpp"
#include "ccp/random.hpp"

namespace ccp::harness {

inline std::string tag_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "tag%03zu", i);
    return buf;
}

inline Vec3 uniform_in(const Box& b, RandomStream& rng) {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p(k) = rng.uniform(0.0, 1.0) * (b.hi(k) - b.lo(k)) + b.lo(k);
    return p;
}

/// Tags uniform in `box` with rolls uniform over a full turn.
inline std::vector<TagSpec> make_tags(std::size_t count, const Box& box, double sensitivity_dbm, RandomStream& rng) {
    std::vector<TagSpec> tags(count);
    for (std::size_t i = 0; i < count; ++i) {
        tags[i].id = tag_name(i);
        tags[i].position = uniform_in(box, rng);
        tags[i].roll = TagAngle(rng.uniform(0.0, 2.0 * kPi));
        tags[i].sensitivity_dbm = sensitivity_dbm;
    }
    return tags;
}

inline std::vector<Scatterer> make_scatterers(const ScenarioConfig& c, RandomStream& rng) {
    std::vector<Scatterer> out(c.scatterer_count);
    for (Scatterer& s : out) {
        s.position = uniform_in(c.scatterer_box, rng);
        s.loss_db = rng.uniform(c.scatterer_loss_min_db, c.scatterer_loss_max_db);
    }
    return out;
}

/// Serpentine raster over the plane y = -distance, covering
/// [0, extent_x] x [0, extent_z].
inline std::vector<ReaderPose> planar_sweep(double distance, double extent_x, double extent_z, double step) {
    const auto nx = static_cast<std::size_t>(std::floor(extent_x / step + 1e-9)) + 1;
    const auto nz = static_cast<std::size_t>(std::floor(extent_z / step + 1e-9)) + 1;
    std::vector<ReaderPose> poses;
    poses.reserve(nx * nz);
    for (std::size_t iz = 0; iz < nz; ++iz) {
        for (std::size_t j = 0; j < nx; ++j) {
            const std::size_t ix = iz % 2 == 0 ? j : nx - 1 - j;
            ReaderPose p;
            p.position = {static_cast<double>(ix) * step, -distance, static_cast<double>(iz) * step};
            poses.push_back(p);
        }
    }
    return poses;
}

/// Fixed-length steps in uniformly random directions, mirrored back into
/// the bounds whenever a step would leave them.
inline std::vector<ReaderPose> random_walk_3d(const WalkSpec& w, RandomStream& rng) {
    std::vector<ReaderPose> poses(w.poses);
    Vec3 x = uniform_in(w.bounds, rng);
    for (std::size_t i = 0; i < w.poses; ++i) {
        poses[i].position = x;
        Vec3 dir(rng.normal(), rng.normal(), rng.normal());
        if (dir.norm() < 1e-12) dir = Vec3::UnitX();
        x += dir.normalized() * w.step_m;
        for (int k = 0; k < 3; ++k) {
            const double lo = w.bounds.lo(k), hi = w.bounds.hi(k);
            if (hi - lo <= 0.0) {
                x(k) = lo;
                continue;
            }
            if (x(k) < lo) x(k) = 2.0 * lo - x(k);
            if (x(k) > hi) x(k) = 2.0 * hi - x(k);
            x(k) = std::clamp(x(k), lo, hi);
        }
    }
    return poses;
}

/// Self-tracking error: a cumulative random walk (per-step 3D standard
/// deviation random_walk_sigma) plus a drift of bias_drift per metre
/// travelled along one random direction. Orientation is untouched.
inline std::vector<ReaderPose> vio_perturb(const std::vector<ReaderPose>& poses, const VioNoiseModel& model,
                                           RandomStream& rng) {
    if (model.is_zero() || poses.empty()) return poses;
    Vec3 drift_dir(rng.normal(), rng.normal(), rng.normal());
    drift_dir = drift_dir.norm() > 1e-12 ? Vec3(drift_dir.normalized()) : Vec3::UnitX();
    const double axis_sigma = model.random_walk_sigma / std::sqrt(3.0);
    std::vector<ReaderPose> out = poses;
    Vec3 walk = Vec3::Zero();
    double travelled = 0.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (i > 0) {
            travelled += (poses[i].position - poses[i - 1].position).norm();
            if (axis_sigma > 0.0)
                for (int k = 0; k < 3; ++k) walk(k) += rng.normal(0.0, axis_sigma);
        }
        out[i].position = poses[i].position + walk + drift_dir * (model.bias_drift * travelled);
    }
    return out;
}

}  // namespace ccp::harness
