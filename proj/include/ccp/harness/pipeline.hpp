// SPDX-License-Identifier: Apache-2.0
//
// End-to-end pipeline over one realized trial: inventory at every pose,
// per-read range estimates, per-tag localization and error scoring.
// Every reader variant ("arm") evaluated on a trial draws its noise from
// the same per-(pose, tag) streams, so arms differ only in the stage they
// swap out.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ccp/estimation.hpp"
#include "ccp/harness/scenario.hpp"
#include "ccp/localization.hpp"

namespace ccp::harness {

/// A realized scene plus the trajectory walked through it.
struct Trial {
    Environment env;
    std::vector<ReaderPose> poses;
    /// Poses as reported by self-tracking.
    std::vector<ReaderPose> tracked;
    /// Parent of every noise stream used while sensing.
    RandomStream noise{0};
    /// Tag plane experiments score error in the x-z plane only.
    bool planar = false;
};

enum class Combining {
    full,        ///< estimate the roll, then combine all four entries
    horizontal,  ///< fixed H/H link only
};

struct Arm {
    std::string name;
    ReaderDesign design = ReaderDesign::ccp();
    Combining combining = Combining::full;
    /// Subset of plan hops to range with; empty keeps all.
    std::vector<double> hops;
    bool true_poses = false;
    SelectionMode selection = SelectionMode::grid;
};

inline Arm make_arm(std::string name, ReaderDesign design = ReaderDesign::ccp()) {
    Arm a;
    a.name = std::move(name);
    a.design = std::move(design);
    return a;
}

struct TagOutcome {
    std::string tag_id;
    Vec3 estimate = Vec3::Zero();
    double error_m = 0.0;
    bool localized = false;
    /// Empty when localized, else why the fallback estimate was used.
    std::string reason;
    std::size_t measurements = 0;
};

/// Key separating the stream families drawn from a trial seed.
enum StreamKey : std::uint64_t { kSceneKey = 1, kTrajectoryKey = 2, kVioKey = 3, kNoiseKey = 4, kSelectKey = 5 };

inline Trial make_walk_trial(const ScenarioConfig& c, std::uint64_t trial_seed) {
    const RandomStream root(trial_seed);
    Trial t;
    RandomStream scene = root.child({kSceneKey});
    t.env.tags = make_tags(c.tag_count, c.tag_box, c.tag_sensitivity_dbm, scene);
    t.env.scatterers = make_scatterers(c, scene);
    t.env.interference = c.interference;
    RandomStream traj = root.child({kTrajectoryKey});
    t.poses = random_walk_3d(c.walk, traj);
    RandomStream vio = root.child({kVioKey});
    t.tracked = vio_perturb(t.poses, c.vio, vio);
    t.noise = root.child({kNoiseKey});
    return t;
}

/// Tags on the plane y = 0 and a raster at y = -distance. The tag layout
/// depends on the trial seed only, so it is shared across distances.
inline Trial make_planar_trial(const ScenarioConfig& c, std::uint64_t trial_seed, std::size_t tags,
                               double distance) {
    const RandomStream root(trial_seed);
    Trial t;
    t.planar = true;
    RandomStream scene = root.child({kSceneKey});
    Box plane;
    plane.hi = {c.planar.extent_x, 0.0, c.planar.extent_z};
    t.env.tags = make_tags(tags, plane, c.tag_sensitivity_dbm, scene);
    t.env.scatterers = make_scatterers(c, scene);
    t.env.interference = c.interference;
    t.poses = planar_sweep(distance, c.planar.extent_x, c.planar.extent_z, c.planar.step_m);
    RandomStream vio = root.child({kVioKey});
    t.tracked = vio_perturb(t.poses, c.vio, vio);
    t.noise = root.child({kNoiseKey});
    return t;
}

/// Inventory at every true pose. Pose k draws from noise.child({k}).
inline std::vector<std::vector<TagRead>> simulate_reads(const Trial& t, const ReaderDesign& design,
                                                        const ScenarioConfig& c) {
    const SlotSchedule schedule = build_schedule(c.plan);
    std::vector<std::vector<TagRead>> out;
    out.reserve(t.poses.size());
    InventoryClock clock;
    for (std::size_t k = 0; k < t.poses.size(); ++k)
        out.push_back(
            run_inventory(t.env, t.poses[k], c.plan, schedule, design, c.link, t.noise.child({k}), &clock));
    return out;
}

inline TofOptions tof_options(const Thresholds& th) {
    TofOptions o;
    o.max_range_m = th.max_range_m;
    o.step_m = th.range_step_m;
    o.beta = th.beta;
    o.taper = th.taper;
    return o;
}

/// Aggregate SNR of the combined hops: total signal over total noise.
inline double combined_snr_db(const std::vector<CombinedHop>& hops) {
    double s = 0.0, n = 0.0;
    for (const CombinedHop& h : hops) {
        s += std::norm(h.g);
        n += h.sigma * h.sigma;
    }
    if (n == 0.0) return s > 0.0 ? kPosInf : kUnreadSnrDb;
    return power_to_db(s / n);
}

/// Reduces one read to the hops and combining an arm uses.
inline std::vector<CombinedHop> arm_channel(const WidebandChannel& ch, const Arm& arm) {
    std::vector<CombinedHop> g;
    if (ch.single_entry) {
        g = combine_channels(ch, TagAngle(0.0));
    } else if (arm.combining == Combining::horizontal) {
        g = horizontal_only(ch);
    } else {
        g = combine_channels(ch, estimate_tag_angle(ch));
    }
    if (!arm.hops.empty()) {
        std::erase_if(g, [&](const CombinedHop& h) {
            return std::none_of(arm.hops.begin(), arm.hops.end(),
                                [&](double f) { return std::abs(f - h.freq_hz) < 1e3; });
        });
    }
    return g;
}

/// One range per successful read, keyed by tag id, placed at the pose the
/// arm believes the reader was at.
inline std::map<std::string, std::vector<RangingMeasurement>> to_measurements(
    const Trial& t, const std::vector<std::vector<TagRead>>& reads, const Arm& arm, const Thresholds& th) {
    std::map<std::string, std::vector<RangingMeasurement>> out;
    for (const TagSpec& tag : t.env.tags) out[tag.id];
    const TofOptions opt = tof_options(th);
    for (std::size_t k = 0; k < reads.size(); ++k) {
        const Vec3& where = (arm.true_poses ? t.poses[k] : t.tracked[k]).position;
        for (const TagRead& r : reads[k]) {
            if (!r.success || r.channel.hops.empty()) continue;
            try {
                const std::vector<CombinedHop> g = arm_channel(r.channel, arm);
                const TofResult tof = tof_estimate(g, opt);
                out[r.tag_id].push_back({where, tof.distance_m, combined_snr_db(g)});
            } catch (const EstimationUnavailable&) {
                // Nothing usable in this read.
            }
        }
    }
    return out;
}

inline double scored_error(const Vec3& est, const Vec3& truth, bool planar) {
    const Vec3 d = est - truth;
    return planar ? std::hypot(d.x(), d.z()) : d.norm();
}

/// Localizes every tag of the trial. A tag that cannot be localized is
/// still scored, against the coarse estimate a user would fall back to.
inline std::vector<TagOutcome> localize_trial(const Trial& t,
                                              const std::map<std::string, std::vector<RangingMeasurement>>& ms,
                                              const Arm& arm, const Thresholds& th, std::uint64_t select_seed) {
    LocalizeOptions lo;
    lo.tau_db = th.tau_db;
    lo.selection = arm.selection;
    lo.random_seed = select_seed;
    lo.look_direction = Vec3::UnitY();
    const auto outcomes = localize_all(ms, lo);

    Vec3 centroid = Vec3::Zero();
    for (const ReaderPose& p : t.tracked) centroid += p.position;
    centroid /= static_cast<double>(std::max<std::size_t>(t.tracked.size(), 1));

    std::vector<TagOutcome> out;
    out.reserve(t.env.tags.size());
    for (const TagSpec& tag : t.env.tags) {
        TagOutcome o;
        o.tag_id = tag.id;
        const auto& tag_ms = ms.at(tag.id);
        o.measurements = tag_ms.size();
        const LocalizationOutcome& lo_out = outcomes.at(tag.id);
        if (lo_out.localized()) {
            o.localized = true;
            o.estimate = lo_out.estimate->position;
        } else {
            o.reason = lo_out.reason;
            o.estimate = tag_ms.empty() ? centroid : initial_guess(tag_ms, lo.look_direction);
        }
        o.error_m = scored_error(o.estimate, tag.position, t.planar);
        out.push_back(o);
    }
    return out;
}

/// Reads, ranges and localizes one trial for one arm.
inline std::vector<TagOutcome> run_arm(const Trial& t, const Arm& arm, const ScenarioConfig& c,
                                       std::uint64_t select_seed = 0) {
    const auto reads = simulate_reads(t, arm.design, c);
    return localize_trial(t, to_measurements(t, reads, arm, c.thresholds), arm, c.thresholds, select_seed);
}

}  // namespace ccp::harness
