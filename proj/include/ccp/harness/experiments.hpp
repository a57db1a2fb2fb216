// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers. Each returns a CSV table (one row per trial unit) and
// a JSON summary. All numbers are printed at fixed precision so that a
// (config, seed) pair always reproduces byte-identical files.

#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccp/harness/pipeline.hpp"

namespace ccp::harness {

using Json = nlohmann::ordered_json;

struct ExperimentResult {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    Json summary;

    void write_csv(std::ostream& os) const {
        auto line = [&os](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

// ---------------------------------------------------------------- helpers

inline std::string fixed(double v, int digits = 6) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    // Avoid "-0.000000" flip-flopping with "0.000000".
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

/// JSON-safe rounding so summaries do not carry platform-noise digits.
inline double rounded(double v, int digits = 6) {
    if (!std::isfinite(v)) return v;
    return std::stod(fixed(v, digits));
}

/// Linear-interpolated percentile, q in [0, 100].
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

inline double median(const std::vector<double>& v) { return percentile(v, 50.0); }

inline Json error_summary(const std::vector<TagOutcome>& outcomes) {
    std::vector<double> e;
    std::size_t localized = 0;
    for (const auto& o : outcomes) {
        e.push_back(o.error_m);
        localized += o.localized;
    }
    Json j;
    j["tags"] = outcomes.size();
    j["localized_fraction"] = rounded(outcomes.empty() ? 0.0 : double(localized) / double(outcomes.size()));
    j["median_m"] = rounded(median(e));
    j["p90_m"] = rounded(percentile(e, 90.0));
    j["mean_m"] = rounded(e.empty() ? 0.0 : std::accumulate(e.begin(), e.end(), 0.0) / double(e.size()));
    return j;
}

/// Deterministic per-experiment trial seed.
inline std::uint64_t trial_seed(const ScenarioConfig& c, std::uint64_t experiment, std::uint64_t trial) {
    return derive_seed(c.seed, {experiment, trial});
}

inline const std::vector<std::string>& localization_header() {
    static const std::vector<std::string> h{"arm",  "trial", "tag_id",     "error_m",  "localized",
                                            "reason", "n_meas", "est_x_m", "est_y_m", "est_z_m"};
    return h;
}

inline std::vector<std::string> localization_row(const std::string& arm, std::size_t trial, const TagOutcome& o) {
    return {arm,
            std::to_string(trial),
            o.tag_id,
            fixed(o.error_m),
            o.localized ? "1" : "0",
            o.reason.empty() ? "ok" : o.reason,
            std::to_string(o.measurements),
            fixed(o.estimate.x()),
            fixed(o.estimate.y()),
            fixed(o.estimate.z())};
}

/// Runs arms that share reads (same design) over walk trials.
struct ArmTally {
    std::string name;
    std::vector<TagOutcome> all;
    std::vector<double> trial_medians;
};

inline ExperimentResult run_walk_arms(const std::string& name, std::uint64_t exp_id, const ScenarioConfig& c,
                                      const std::vector<Arm>& arms,
                                      const std::function<void(Trial&, const Arm&)>& tweak = {}) {
    ExperimentResult r;
    r.name = name;
    r.header = localization_header();
    std::vector<ArmTally> tally(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) tally[a].name = arms[a].name;
    for (std::size_t trial = 0; trial < c.experiment.trials; ++trial) {
        const Trial base = make_walk_trial(c, trial_seed(c, exp_id, trial));
        // Arms with the same design and scene reuse one set of reads.
        std::vector<std::vector<TagRead>> cached;
        const Arm* cached_for = nullptr;
        for (std::size_t a = 0; a < arms.size(); ++a) {
            Trial t = base;
            if (tweak) tweak(t, arms[a]);
            const bool reuse = cached_for && !tweak && cached_for->design.name == arms[a].design.name;
            if (!reuse) {
                cached = simulate_reads(t, arms[a].design, c);
                cached_for = &arms[a];
            }
            const auto ms = to_measurements(t, cached, arms[a], c.thresholds);
            const auto out =
                localize_trial(t, ms, arms[a], c.thresholds, derive_seed(c.seed, {exp_id, trial, kSelectKey}));
            std::vector<double> e;
            for (const auto& o : out) {
                r.rows.push_back(localization_row(arms[a].name, trial, o));
                e.push_back(o.error_m);
            }
            tally[a].trial_medians.push_back(median(e));
            tally[a].all.insert(tally[a].all.end(), out.begin(), out.end());
        }
    }
    r.summary["experiment"] = name;
    r.summary["seed"] = c.seed;
    r.summary["trials"] = c.experiment.trials;
    for (const auto& t : tally) {
        Json j = error_summary(t.all);
        Json meds = Json::array();
        for (double m : t.trial_medians) meds.push_back(rounded(m));
        j["trial_medians_m"] = meds;
        r.summary["arms"][t.name] = j;
    }
    return r;
}

// ------------------------------------------------------------ experiments

/// Fraction of tags read at least once over a planar sweep, per design and
/// distance.
inline ExperimentResult read_rate_between(const std::string& name, std::uint64_t exp_id, const ScenarioConfig& c,
                                          const std::vector<ReaderDesign>& designs) {
    ExperimentResult r;
    r.name = name;
    r.header = {"design", "distance_m", "trial", "tags", "read", "read_rate"};
    Json per;
    for (const ReaderDesign& d0 : designs) {
        ReaderDesign d = d0;
        d.sensing_enabled = false;
        for (double dist : c.planar.distances) {
            double sum = 0.0;
            for (std::size_t trial = 0; trial < c.experiment.trials; ++trial) {
                const Trial t = make_planar_trial(c, trial_seed(c, exp_id, trial), c.planar.tags, dist);
                const auto reads = simulate_reads(t, d, c);
                std::vector<bool> seen(t.env.tags.size(), false);
                for (const auto& at_pose : reads)
                    for (const TagRead& tr : at_pose)
                        if (tr.success) seen[tr.tag_index] = true;
                const auto n = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
                const double rate = double(n) / double(seen.size());
                sum += rate;
                r.rows.push_back({d.name, fixed(dist, 2), std::to_string(trial), std::to_string(seen.size()),
                                  std::to_string(n), fixed(rate)});
            }
            per[d.name][fixed(dist, 2)] = rounded(sum / double(c.experiment.trials));
        }
    }
    r.summary["experiment"] = name;
    r.summary["seed"] = c.seed;
    r.summary["trials"] = c.experiment.trials;
    r.summary["mean_read_rate"] = per;
    return r;
}

inline ExperimentResult exp_read_rate(const ScenarioConfig& c) {
    return read_rate_between("read_rate", 1, c, {ReaderDesign::ccp(), ReaderDesign::linear_ib()});
}

inline ExperimentResult exp_crosspol_ablation(const ScenarioConfig& c) {
    return read_rate_between("crosspol_ablation", 2, c, {ReaderDesign::ccp(), ReaderDesign::no_crosspol()});
}

/// Planar 2D localization error versus distance with and without
/// out-of-band nulling, on identical draws.
inline ExperimentResult exp_nulling_ablation(const ScenarioConfig& c) {
    ExperimentResult r;
    r.name = "nulling_ablation";
    r.header = {"arm", "distance_m", "trial", "tag_id", "error_m", "localized", "reason", "n_meas"};
    Arm with = make_arm("nulling");
    Arm without = make_arm("no_nulling", ReaderDesign::no_nulling());
    Json per;
    for (double dist : c.planar.distances) {
        std::vector<double> e_with, e_without;
        for (std::size_t trial = 0; trial < c.experiment.trials; ++trial) {
            const Trial t = make_planar_trial(c, trial_seed(c, 3, trial), c.experiment.planar_tags, dist);
            for (const Arm* arm : {&with, &without}) {
                for (const TagOutcome& o : run_arm(t, *arm, c)) {
                    r.rows.push_back({arm->name, fixed(dist, 2), std::to_string(trial), o.tag_id, fixed(o.error_m),
                                      o.localized ? "1" : "0", o.reason.empty() ? "ok" : o.reason,
                                      std::to_string(o.measurements)});
                    (arm == &with ? e_with : e_without).push_back(o.error_m);
                }
            }
        }
        Json j;
        j["nulling_median_m"] = rounded(median(e_with));
        j["no_nulling_median_m"] = rounded(median(e_without));
        j["nulling_p90_m"] = rounded(percentile(e_with, 90.0));
        j["no_nulling_p90_m"] = rounded(percentile(e_without, 90.0));
        per[fixed(dist, 2)] = j;
    }
    r.summary["experiment"] = r.name;
    r.summary["seed"] = c.seed;
    r.summary["trials"] = c.experiment.trials;
    r.summary["by_distance"] = per;
    return r;
}

/// Localization error distribution; grid selection against random subsets
/// of equal size drawn from the same measurements.
inline ExperimentResult exp_loc_cdf(const ScenarioConfig& c) {
    Arm grid = make_arm("ccp");
    Arm random = make_arm("ccp_random_subset");
    random.selection = SelectionMode::random;
    ExperimentResult r = run_walk_arms("loc_cdf", 4, c, {grid, random});
    const Json& a = r.summary["arms"];
    r.summary["grid_not_worse_than_random"] = a["ccp"]["median_m"].get<double>() <=
                                              a["ccp_random_subset"]["median_m"].get<double>();
    return r;
}

/// Orientation-robustness comparison: CCP against a fixed linear link and a
/// commercial circular patch (the latter with ground-truth poses).
inline ExperimentResult exp_baseline_cmp(const ScenarioConfig& c) {
    Arm ccp = make_arm("ccp");
    Arm linear = make_arm("linear_tof");
    linear.combining = Combining::horizontal;
    Arm circular = make_arm("circular_tof", ReaderDesign::circular_tof(c.experiment.patch_quality));
    circular.true_poses = true;
    return run_walk_arms("baseline_cmp", 5, c, {ccp, linear, circular});
}

/// Full 245 MHz aperture against a two-hop narrowband subset, same reads.
inline ExperimentResult exp_uwb_ablation(const ScenarioConfig& c) {
    Arm wide = make_arm("wideband");
    Arm narrow = make_arm("narrowband");
    narrow.hops = c.experiment.narrowband_hops;
    ExperimentResult r = run_walk_arms("uwb_ablation", 6, c, {wide, narrow});
    const auto w = r.summary["arms"]["wideband"]["trial_medians_m"];
    const auto n = r.summary["arms"]["narrowband"]["trial_medians_m"];
    std::size_t wins = 0;
    for (std::size_t i = 0; i < w.size(); ++i) wins += w[i].get<double>() < n[i].get<double>();
    r.summary["wideband_better_fraction"] = rounded(w.empty() ? 0.0 : double(wins) / double(w.size()));
    return r;
}

inline ExperimentResult exp_nlos(const ScenarioConfig& c) {
    Arm los = make_arm("los");
    Arm nlos = make_arm("nlos");
    const double loss = c.experiment.nlos_loss_db;
    return run_walk_arms("nlos", 9, c, {los, nlos}, [loss](Trial& t, const Arm& arm) {
        if (arm.name == "nlos")
            for (TagSpec& tag : t.env.tags) tag.blocked_loss_db = loss;
    });
}

inline ExperimentResult exp_vio_ablation(const ScenarioConfig& c) {
    Arm oracle = make_arm("oracle_poses");
    oracle.true_poses = true;
    Arm vio = make_arm("vio_poses");
    return run_walk_arms("vio_ablation", 10, c, {oracle, vio});
}

// ------------------------------------------------ single-tag orientation

/// Channel of a lone tag at `roll` in front of the reader, as seen by the
/// circular patch (one entry at the in-band hop) or by CCP combining.
struct AngleProbe {
    Complex cp;
    std::vector<CombinedHop> ccp;
    WidebandChannel raw;
};

inline AngleProbe probe_angle(const ScenarioConfig& c, double roll, const LinkBudget& link, const RandomStream& rng) {
    Environment env;
    env.interference = c.interference;
    TagSpec tag;
    tag.id = "probe";
    tag.position = {0.0, c.experiment.angle_distance_m, 0.0};
    tag.roll = TagAngle(roll);
    tag.sensitivity_dbm = c.tag_sensitivity_dbm;
    env.tags.push_back(tag);
    const SlotSchedule sched = build_schedule(c.plan);
    const ReaderPose pose;
    AngleProbe p;

    const auto cp = run_inventory(env, pose, c.plan, sched, ReaderDesign::circular_tof(c.experiment.patch_quality),
                                  link, rng.child({1}));
    const auto lp = run_inventory(env, pose, c.plan, sched, ReaderDesign::ccp(), link, rng.child({2}));
    if (!cp[0].success || !lp[0].success) throw std::runtime_error("probe tag was not read; reduce angle_distance_m");
    for (const HopChannel& h : cp[0].channel.hops)
        if (std::abs(h.freq_hz - c.plan.inband_hz) < 1e3) p.cp = h.h[kHH];
    p.raw = lp[0].channel;
    p.ccp = combine_channels(p.raw, estimate_tag_angle(p.raw));
    return p;
}

inline Complex at_inband(const std::vector<CombinedHop>& g, double inband_hz) {
    for (const CombinedHop& h : g)
        if (std::abs(h.freq_hz - inband_hz) < 1e3) return h.g;
    return g.front().g;
}

/// Sequential unwrap of a phase sequence.
inline std::vector<double> unwrap(const std::vector<double>& ph) {
    std::vector<double> out(ph);
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] + wrap_angle(ph[i] - ph[i - 1]);
    return out;
}

inline ExperimentResult exp_phase_vs_angle(const ScenarioConfig& c) {
    ExperimentResult r;
    r.name = "phase_vs_angle";
    r.header = {"link", "roll_deg", "trial", "phase_rad", "offset_rad"};
    LinkBudget quiet = c.link;
    quiet.noise_free = true;
    const RandomStream root(derive_seed(c.seed, {7}));

    std::vector<int> rolls;
    for (int d = 0; d <= 180; d += 10) rolls.push_back(d);
    // Noiseless references.
    std::vector<double> cp_ref, lp_ref;
    for (int d : rolls) {
        const AngleProbe p = probe_angle(c, deg_to_rad(d), quiet, root);
        cp_ref.push_back(std::arg(p.cp));
        lp_ref.push_back(std::arg(at_inband(p.ccp, c.plan.inband_hz)));
    }
    auto span_to_90 = [&](const std::vector<double>& ph) {
        const std::vector<double> u = unwrap(std::vector<double>(ph.begin(), ph.begin() + 10));
        return *std::max_element(u.begin(), u.end()) - *std::min_element(u.begin(), u.end());
    };
    double lp_ref_dev = 0.0;
    for (double p : lp_ref) lp_ref_dev = std::max(lp_ref_dev, std::abs(wrap_angle(p - lp_ref[0])));

    std::vector<double> cp_spans, lp_dev;
    for (std::size_t trial = 0; trial < c.experiment.angle_trials; ++trial) {
        std::vector<double> cp_ph;
        for (std::size_t i = 0; i < rolls.size(); ++i) {
            const AngleProbe p = probe_angle(c, deg_to_rad(rolls[i]), c.link, root.child({trial, i}));
            const double cp = std::arg(p.cp), lp = std::arg(at_inband(p.ccp, c.plan.inband_hz));
            cp_ph.push_back(cp);
            lp_dev.push_back(std::abs(wrap_angle(lp - lp_ref[i])));
            r.rows.push_back({"cp", std::to_string(rolls[i]), std::to_string(trial), fixed(cp),
                              fixed(wrap_angle(cp - cp_ref[0]))});
            r.rows.push_back({"ccp", std::to_string(rolls[i]), std::to_string(trial), fixed(lp),
                              fixed(wrap_angle(lp - lp_ref[0]))});
        }
        cp_spans.push_back(span_to_90(cp_ph));
    }
    Json slope = Json::array();
    for (std::size_t i = 1; i < 10; ++i) slope.push_back(rounded(wrap_angle(cp_ref[i - 1] - cp_ref[i])));
    r.summary["experiment"] = r.name;
    r.summary["seed"] = c.seed;
    r.summary["trials"] = c.experiment.angle_trials;
    r.summary["cp_noiseless_span_0_90_rad"] = rounded(span_to_90(cp_ref), 9);
    r.summary["cp_noiseless_step_rad"] = slope;
    r.summary["cp_noisy_span_median_rad"] = rounded(median(cp_spans));
    r.summary["cp_noisy_span_min_rad"] = rounded(*std::min_element(cp_spans.begin(), cp_spans.end()));
    r.summary["ccp_noiseless_max_deviation_rad"] = rounded(lp_ref_dev, 12);
    r.summary["ccp_noisy_p90_deviation_rad"] = rounded(percentile(lp_dev, 90.0));
    return r;
}

inline double mean_power_db(const std::vector<CombinedHop>& g) {
    double s = 0.0;
    for (const CombinedHop& h : g) s += std::norm(h.g);
    return power_to_db(s / double(g.size()));
}

inline double entry_snr_db(const WidebandChannel& ch, std::size_t e) {
    double s = 0.0, n = 0.0;
    for (const HopChannel& h : ch.hops) {
        s += std::norm(h.h[e]);
        n += h.sigma[e] * h.sigma[e];
    }
    return n == 0.0 ? kPosInf : power_to_db(s / n);
}

inline ExperimentResult exp_snr_vs_angle(const ScenarioConfig& c) {
    ExperimentResult r;
    r.name = "snr_vs_angle";
    r.header = {"roll_deg", "trial", "snr_hh_db", "snr_vv_db", "snr_combined_db", "magnitude_db"};
    LinkBudget quiet = c.link;
    quiet.noise_free = true;
    const RandomStream root(derive_seed(c.seed, {8}));
    std::vector<double> ref;
    for (int d = 0; d < 360; d += 10) ref.push_back(mean_power_db(probe_angle(c, deg_to_rad(d), quiet, root).ccp));
    std::vector<double> spreads, combined, hh_min;
    for (std::size_t trial = 0; trial < c.experiment.angle_trials; ++trial) {
        std::vector<double> mags;
        double worst_hh = kPosInf;
        for (int d = 0, i = 0; d < 360; d += 10, ++i) {
            const AngleProbe p = probe_angle(c, deg_to_rad(d), c.link, root.child({trial, std::uint64_t(i)}));
            const double hh = entry_snr_db(p.raw, kHH), vv = entry_snr_db(p.raw, kVV);
            const double cs = combined_snr_db(p.ccp), mag = mean_power_db(p.ccp);
            mags.push_back(mag);
            combined.push_back(cs);
            worst_hh = std::min(worst_hh, hh);
            r.rows.push_back({std::to_string(d), std::to_string(trial), fixed(hh), fixed(vv), fixed(cs), fixed(mag)});
        }
        spreads.push_back(*std::max_element(mags.begin(), mags.end()) - *std::min_element(mags.begin(), mags.end()));
        hh_min.push_back(worst_hh);
    }
    r.summary["experiment"] = r.name;
    r.summary["seed"] = c.seed;
    r.summary["trials"] = c.experiment.angle_trials;
    r.summary["noiseless_magnitude_spread_db"] =
        rounded(*std::max_element(ref.begin(), ref.end()) - *std::min_element(ref.begin(), ref.end()), 9);
    r.summary["noisy_magnitude_spread_median_db"] = rounded(median(spreads));
    r.summary["noisy_magnitude_spread_max_db"] = rounded(*std::max_element(spreads.begin(), spreads.end()));
    r.summary["combined_snr_median_db"] = rounded(median(combined));
    r.summary["hh_worst_snr_median_db"] = rounded(median(hh_min));
    return r;
}

// --------------------------------------------------------------- registry

struct ExperimentEntry {
    const char* name;
    ExperimentResult (*run)(const ScenarioConfig&);
};

inline const std::vector<ExperimentEntry>& experiments() {
    static const std::vector<ExperimentEntry> list{
        {"read_rate", exp_read_rate},         {"crosspol_ablation", exp_crosspol_ablation},
        {"nulling_ablation", exp_nulling_ablation}, {"loc_cdf", exp_loc_cdf},
        {"baseline_cmp", exp_baseline_cmp},   {"uwb_ablation", exp_uwb_ablation},
        {"phase_vs_angle", exp_phase_vs_angle}, {"snr_vs_angle", exp_snr_vs_angle},
        {"nlos", exp_nlos},                   {"vio_ablation", exp_vio_ablation},
    };
    return list;
}

inline const ExperimentEntry* find_experiment(const std::string& name) {
    for (const auto& e : experiments())
        if (name == e.name) return &e;
    return nullptr;
}

}  // namespace ccp::harness
