// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: a sectioned key = value file. Every key is
// required so that a config fully pins an experiment; a missing or
// malformed key is reported by its section.key path.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ccp/channel.hpp"
#include "ccp/protocol.hpp"

namespace ccp::harness {

struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
};

/// Pose-tracking error of the handheld reader.
struct VioNoiseModel {
    /// Per-step standard deviation of the 3D random walk, in m.
    double random_walk_sigma = 0.0;
    /// Systematic drift in m per m travelled.
    double bias_drift = 0.0;

    [[nodiscard]] bool is_zero() const { return random_walk_sigma == 0.0 && bias_drift == 0.0; }
};

/// Free 3D walk used by the localization experiments.
struct WalkSpec {
    Box bounds;
    double step_m = 0.15;
    std::size_t poses = 150;
};

/// Read-rate and planar-localization geometry: tags on the plane y = 0,
/// reader rastering a parallel plane y = -distance.
struct PlanarSpec {
    std::size_t tags = 30;
    double extent_x = 2.0;
    double extent_z = 1.5;
    double step_m = 0.25;
    std::vector<double> distances{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
};

struct Thresholds {
    double tau_db = 4.0;
    double beta = 0.5;
    double eta = 0.6;
    double max_range_m = 5.0;
    double range_step_m = 0.01;
    bool taper = true;
};

/// Knobs that only particular experiments read.
struct ExperimentSpec {
    std::size_t trials = 20;
    std::size_t planar_tags = 12;
    std::vector<double> narrowband_hops{790e6, 833e6};
    double patch_quality = 20.0;
    double nlos_loss_db = 10.0;
    double angle_distance_m = 1.5;
    std::size_t angle_trials = 50;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "results";

    std::size_t tag_count = 25;
    Box tag_box;
    double tag_sensitivity_dbm = -14.5;
    std::size_t scatterer_count = 2;
    Box scatterer_box;
    double scatterer_loss_min_db = 6.0;
    double scatterer_loss_max_db = 12.0;

    WalkSpec walk;
    PlanarSpec planar;
    FrequencyPlan plan;
    LinkBudget link;
    InterferenceModel interference = InterferenceModel::with_default_nulling();
    VioNoiseModel vio;
    Thresholds thresholds;
    ExperimentSpec experiment;
};

namespace detail {

using boost::property_tree::ptree;

template <typename T>
T require(const ptree& pt, const std::string& path) {
    const auto node = pt.get_child_optional(ptree::path_type(path, '.'));
    if (!node) throw ConfigError("missing field " + path);
    const auto v = node->get_value_optional<T>();
    if (!v) throw ConfigError("malformed field " + path + ": '" + node->data() + "'");
    return *v;
}

inline std::vector<double> require_list(const ptree& pt, const std::string& path, double scale = 1.0) {
    const std::string raw = require<std::string>(pt, path);
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("malformed field " + path + ": '" + raw + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw ConfigError("malformed field " + path + ": '" + raw + "'");
        out.push_back(v * scale);
    }
    if (out.empty()) throw ConfigError("empty list " + path);
    return out;
}

inline Vec3 require_vec(const ptree& pt, const std::string& path) {
    const auto v = require_list(pt, path);
    if (v.size() != 3) throw ConfigError("field " + path + " needs three values");
    return {v[0], v[1], v[2]};
}

inline Box require_box(const ptree& pt, const std::string& prefix) {
    return {require_vec(pt, prefix + "_min"), require_vec(pt, prefix + "_max")};
}

inline bool require_bool(const ptree& pt, const std::string& path) {
    const std::string v = require<std::string>(pt, path);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("malformed field " + path + ": '" + v + "'");
}

inline std::size_t require_count(const ptree& pt, const std::string& path) {
    const long v = require<long>(pt, path);
    if (v < 0) throw ConfigError("field " + path + " must be non-negative");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Semantic checks beyond parsing.
inline void validate(const ScenarioConfig& c) {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    c.plan.validate();
    check(c.plan.hops.size() >= 2, "plan.hops_mhz needs at least two hops");
    for (double f : c.plan.hops) (void)c.interference.nulling_at(f);
    (void)c.interference.nulling_at(c.plan.inband_hz);
    for (double f : c.experiment.narrowband_hops) {
        check(std::find(c.plan.hops.begin(), c.plan.hops.end(), f) != c.plan.hops.end(),
              "experiment.narrowband_hops_mhz must be a subset of plan.hops_mhz");
    }
    check(c.experiment.narrowband_hops.size() >= 2, "experiment.narrowband_hops_mhz needs two hops");
    check(c.tag_count >= 1, "scene.tags must be positive");
    check((c.tag_box.hi - c.tag_box.lo).minCoeff() >= 0.0, "scene.tag_box is inverted");
    check((c.scatterer_box.hi - c.scatterer_box.lo).minCoeff() >= 0.0, "scene.scatterer_box is inverted");
    check(c.scatterer_loss_min_db <= c.scatterer_loss_max_db, "scene.scatterer_loss range is inverted");
    check(c.walk.poses >= 4, "walk.poses must be at least 4");
    check(c.walk.step_m > 0.0, "walk.step_m must be positive");
    check((c.walk.bounds.hi - c.walk.bounds.lo).minCoeff() >= 0.0, "walk.bounds is inverted");
    check(c.planar.tags >= 1, "planar.tags must be positive");
    check(c.planar.step_m > 0.0 && c.planar.extent_x >= 0.0 && c.planar.extent_z >= 0.0,
          "planar sweep extents must be non-negative and step positive");
    for (double d : c.planar.distances) check(d > 0.0, "planar.distances_m must be positive");
    check(c.vio.random_walk_sigma >= 0.0 && c.vio.bias_drift >= 0.0, "vio parameters must be non-negative");
    check(c.thresholds.beta > 0.0 && c.thresholds.beta <= 1.0, "estimation.beta must lie in (0, 1]");
    check(c.thresholds.eta > 0.0 && c.thresholds.eta <= 1.0, "estimation.eta must lie in (0, 1]");
    check(c.thresholds.range_step_m > 0.0 && c.thresholds.max_range_m > 0.0, "estimation range grid must be positive");
    check(c.experiment.trials >= 1, "experiment.trials must be positive");
    check(c.experiment.patch_quality > 0.0, "experiment.patch_quality must be positive");
    check(c.experiment.angle_distance_m > 0.0, "experiment.angle_distance_m must be positive");
}

/// section.key = value replacements applied after reading the file.
using Overrides = std::vector<std::pair<std::string, std::string>>;

inline ScenarioConfig parse_config(std::istream& in, const Overrides& overrides = {}) {
    using namespace detail;
    ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.message() + " at line " +
                          std::to_string(e.line()));
    }
    for (const auto& [key, value] : overrides) {
        if (!pt.get_child_optional(ptree::path_type(key, '.'))) throw ConfigError("unknown field " + key);
        pt.put(ptree::path_type(key, '.'), value);
    }
    ScenarioConfig c;
    c.seed = require<std::uint64_t>(pt, "run.seed");
    c.output_dir = require<std::string>(pt, "run.output_dir");

    c.tag_count = require_count(pt, "scene.tags");
    c.tag_box = require_box(pt, "scene.tag_box");
    c.tag_sensitivity_dbm = require<double>(pt, "scene.tag_sensitivity_dbm");
    c.scatterer_count = require_count(pt, "scene.scatterers");
    c.scatterer_box = require_box(pt, "scene.scatterer_box");
    c.scatterer_loss_min_db = require<double>(pt, "scene.scatterer_loss_min_db");
    c.scatterer_loss_max_db = require<double>(pt, "scene.scatterer_loss_max_db");

    c.walk.bounds = require_box(pt, "walk.bounds");
    c.walk.step_m = require<double>(pt, "walk.step_m");
    c.walk.poses = require_count(pt, "walk.poses");

    c.planar.tags = require_count(pt, "planar.tags");
    c.planar.extent_x = require<double>(pt, "planar.extent_x_m");
    c.planar.extent_z = require<double>(pt, "planar.extent_z_m");
    c.planar.step_m = require<double>(pt, "planar.step_m");
    c.planar.distances = require_list(pt, "planar.distances_m");

    c.plan.inband_hz = require<double>(pt, "plan.inband_mhz") * 1e6;
    c.plan.hops = require_list(pt, "plan.hops_mhz", 1e6);

    c.link.inband_eirp_dbm = require<double>(pt, "link.inband_eirp_dbm");
    c.link.oob_eirp_dbm = require<double>(pt, "link.oob_eirp_dbm");
    c.link.tag_backscatter_loss_db = require<double>(pt, "link.tag_backscatter_loss_db");
    c.link.thermal_noise_dbm = require<double>(pt, "link.thermal_noise_dbm");
    c.link.si_rejection_db = require<double>(pt, "link.si_rejection_db");
    c.link.decode_threshold_db = require<double>(pt, "link.decode_threshold_db");
    c.link.read_duration_s = require<double>(pt, "link.read_duration_ms") * 1e-3;
    c.link.noise_free = require_bool(pt, "link.noise_free");

    InterferenceModel& m = c.interference;
    m.natural_isolation_db = require<double>(pt, "interference.natural_isolation_db");
    m.cp_natural_isolation_db = require<double>(pt, "interference.cp_natural_isolation_db");
    m.crosspol_isolation_db = require<double>(pt, "interference.crosspol_isolation_db");
    m.adc_ceiling_dbm = require<double>(pt, "interference.adc_ceiling_dbm");
    m.leakage_phase_seed = require<std::uint64_t>(pt, "interference.leakage_phase_seed");
    const auto freqs = require_list(pt, "interference.nulling_mhz", 1e6);
    const auto vert = require_list(pt, "interference.nulling_vertical_db");
    const auto horiz = require_list(pt, "interference.nulling_horizontal_db");
    if (vert.size() != freqs.size() || horiz.size() != freqs.size())
        throw ConfigError("interference.nulling_* lists must have equal length");
    m.nulling.clear();
    for (std::size_t i = 0; i < freqs.size(); ++i) m.nulling[freqs[i]] = {vert[i], horiz[i]};

    c.vio.random_walk_sigma = require<double>(pt, "vio.random_walk_sigma_m");
    c.vio.bias_drift = require<double>(pt, "vio.bias_drift");

    c.thresholds.tau_db = require<double>(pt, "estimation.tau_db");
    c.thresholds.beta = require<double>(pt, "estimation.beta");
    c.thresholds.eta = require<double>(pt, "estimation.eta");
    c.thresholds.max_range_m = require<double>(pt, "estimation.max_range_m");
    c.thresholds.range_step_m = require<double>(pt, "estimation.range_step_m");
    c.thresholds.taper = require_bool(pt, "estimation.taper");

    c.experiment.trials = require_count(pt, "experiment.trials");
    c.experiment.planar_tags = require_count(pt, "experiment.planar_tags");
    c.experiment.narrowband_hops = require_list(pt, "experiment.narrowband_hops_mhz", 1e6);
    c.experiment.patch_quality = require<double>(pt, "experiment.patch_quality");
    c.experiment.nlos_loss_db = require<double>(pt, "experiment.nlos_loss_db");
    c.experiment.angle_distance_m = require<double>(pt, "experiment.angle_distance_m");
    c.experiment.angle_trials = require_count(pt, "experiment.angle_trials");

    validate(c);
    return c;
}

inline ScenarioConfig load_config(const std::string& path, const Overrides& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse_config(in, overrides);
}

}  // namespace ccp::harness
