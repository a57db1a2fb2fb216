// SPDX-License-Identifier: Apache-2.0
//
// Physical link model: forward powering of passive tags, round-trip
// backscatter over a small set of propagation paths, thermal noise and
// residual transmitter leakage.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "ccp/common.hpp"
#include "ccp/polarization.hpp"
#include "ccp/random.hpp"

namespace ccp {

struct TagSpec {
    std::string id;
    Vec3 position = Vec3::Zero();
    TagAngle roll;
    /// Out-of-plane projection factors; scale amplitude only, never phase.
    double pitch_gain = 1.0;
    double yaw_gain = 1.0;
    double sensitivity_dbm = -18.0;
    /// One-way excess loss on the direct path when it is obstructed.
    double blocked_loss_db = 0.0;

    [[nodiscard]] bool direct_blocked() const noexcept { return blocked_loss_db > 0.0; }
    [[nodiscard]] double out_of_plane_gain() const noexcept { return pitch_gain * yaw_gain; }
};

/// Reader position plus the aperture axes of its horizontal and vertical
/// antennas. The boresight is h x v.
struct ReaderPose {
    Vec3 position = Vec3::Zero();
    Vec3 h_axis = Vec3::UnitX();
    Vec3 v_axis = Vec3::UnitZ();

    [[nodiscard]] Vec3 boresight() const { return h_axis.cross(v_axis); }

    [[nodiscard]] bool orthonormal(double tol = 1e-9) const {
        return std::abs(h_axis.norm() - 1.0) < tol && std::abs(v_axis.norm() - 1.0) < tol &&
               std::abs(h_axis.dot(v_axis)) < tol;
    }
};

/// One propagation path between reader and tag. excess_length is relative
/// to the direct distance; attenuation is extra round-trip loss on top of
/// spherical spreading.
struct PathSpec {
    double excess_length = 0.0;
    double attenuation_db = 0.0;
    bool blocked = false;
};

/// Point scatterer that contributes one reflected path to every link.
struct Scatterer {
    Vec3 position = Vec3::Zero();
    double loss_db = 6.0;
};

enum class AntennaPair {
    horizontal,  ///< H transmit -> H receive (parallel, spaced)
    vertical,    ///< V transmit -> V receive
    cross,       ///< orthogonal linear antennas
    circular,    ///< synthesized circular transmit and receive
};

enum class LeakageScheme { crosspol, nulled, raw };

inline const char* to_string(AntennaPair p) {
    switch (p) {
        case AntennaPair::horizontal: return "horizontal";
        case AntennaPair::vertical: return "vertical";
        case AntennaPair::cross: return "cross";
        case AntennaPair::circular: return "circular";
    }
    return "?";
}

inline const char* to_string(LeakageScheme s) {
    switch (s) {
        case LeakageScheme::crosspol: return "crosspol";
        case LeakageScheme::nulled: return "nulled";
        case LeakageScheme::raw: return "raw";
    }
    return "?";
}

/// Per-frequency over-the-wire nulling depth for the two parallel pairs.
struct NullingEntry {
    double vertical_db = 0.0;
    double horizontal_db = 0.0;
};

struct InterferenceModel {
    double natural_isolation_db = 20.0;
    /// Co-polarized circular link without cross-polarized reception.
    double cp_natural_isolation_db = 21.0;
    double crosspol_isolation_db = 45.0;
    /// Keyed by frequency in Hz.
    std::map<double, NullingEntry> nulling;
    double adc_ceiling_dbm = 10.0;
    std::uint64_t leakage_phase_seed = 0x5eed;

    static InterferenceModel with_default_nulling() {
        InterferenceModel m;
        const std::array<double, 8> mhz{763, 790, 833, 871, 915, 938, 973, 1008};
        const std::array<double, 8> vert{16, 22, 31, 23, 29, 21, 21, 22};
        const std::array<double, 8> horiz{21, 21, 31, 22, 26, 19, 23, 18};
        for (std::size_t i = 0; i < mhz.size(); ++i) m.nulling[mhz[i] * 1e6] = {vert[i], horiz[i]};
        return m;
    }

    [[nodiscard]] const NullingEntry& nulling_at(double freq_hz) const {
        auto it = nulling.lower_bound(freq_hz - 1e3);
        if (it == nulling.end() || std::abs(it->first - freq_hz) > 1e3)
            throw ConfigError("no nulling entry for " + std::to_string(freq_hz / 1e6) + " MHz");
        return it->second;
    }

    /// Deterministic leakage phase for a (frequency, pair).
    [[nodiscard]] double leakage_phase(double freq_hz, AntennaPair pair) const {
        const auto key = static_cast<std::uint64_t>(std::llround(freq_hz / 1e3));
        const std::uint64_t h = derive_seed(leakage_phase_seed, {key, static_cast<std::uint64_t>(pair)});
        return (static_cast<double>(h >> 11) / 9007199254740992.0) * 2.0 * kPi - kPi;
    }

    /// Transmitter-to-receiver isolation in dB for the given scheme.
    [[nodiscard]] double isolation_db(double freq_hz, AntennaPair pair, LeakageScheme scheme) const {
        switch (scheme) {
            case LeakageScheme::crosspol:
                if (pair != AntennaPair::circular && pair != AntennaPair::cross)
                    throw ConfigError("cross-polarized isolation requires an orthogonal pair");
                return crosspol_isolation_db;
            case LeakageScheme::raw:
                return pair == AntennaPair::circular ? cp_natural_isolation_db : natural_isolation_db;
            case LeakageScheme::nulled: {
                if (pair == AntennaPair::cross) return crosspol_isolation_db;
                if (pair == AntennaPair::circular)
                    throw ConfigError("over-the-wire nulling is defined for the parallel pairs only");
                const NullingEntry& e = nulling_at(freq_hz);
                return natural_isolation_db +
                       (pair == AntennaPair::vertical ? e.vertical_db : e.horizontal_db);
            }
        }
        throw ConfigError("unknown leakage scheme");
    }
};

/// 10^(-attenuation/20) * exp(-j 2 pi f L / c) for a path of length L.
inline Complex path_phasor(double freq_hz, double length_m, double attenuation_db) {
    if (!(length_m >= 0.0)) throw DomainError("path length must be non-negative");
    if (!(freq_hz > 0.0)) throw DomainError("frequency must be positive");
    const double phase = -2.0 * kPi * freq_hz * length_m / kSpeedOfLight;
    return db_to_amplitude(-attenuation_db) * std::polar(1.0, phase);
}

struct PoweringResult {
    bool powered = false;
    double delivered_dbm = kNegInf;
};

inline double reader_tag_distance(const ReaderPose& pose, const TagSpec& tag) {
    return (tag.position - pose.position).norm();
}

inline PoweringResult tag_powered(const ReaderPose& pose, const TagSpec& tag, const JonesVector& tx_pol,
                                  double eirp_dbm, double freq_hz) {
    const double d = reader_tag_distance(pose, tag);
    if (d < 0.01) throw DomainError("tag is co-located with the reader");
    const double coupling = std::abs(tag_coupling(tx_pol, tag.roll)) * tag.out_of_plane_gain();
    PoweringResult r;
    r.delivered_dbm =
        eirp_dbm - free_space_path_loss_db(freq_hz, d) + amplitude_to_db(coupling) - tag.blocked_loss_db;
    r.powered = r.delivered_dbm >= tag.sensitivity_dbm;
    return r;
}

/// Complex round-trip channel, normalized to unit transmit amplitude.
inline Complex backscatter_channel(const ReaderPose& pose, const TagSpec& tag, double freq_hz,
                                   const JonesVector& tx_pol, const JonesVector& rx_pol,
                                   const std::vector<PathSpec>& paths) {
    if (paths.empty()) throw DomainError("at least one propagation path is required");
    const double d = reader_tag_distance(pose, tag);
    Complex sum{};
    for (const PathSpec& p : paths) {
        const double one_way = d + p.excess_length;
        const double loss = 2.0 * free_space_path_loss_db(freq_hz, one_way) + p.attenuation_db;
        sum += path_phasor(freq_hz, 2.0 * one_way, loss);
    }
    const double g = tag.out_of_plane_gain();
    return backscatter_factor(tx_pol, rx_pol, tag.roll) * (g * g) * sum;
}

/// Leakage phasor relative to the transmitted amplitude.
inline Complex residual_self_interference(const InterferenceModel& model, double freq_hz, AntennaPair pair,
                                          LeakageScheme scheme) {
    const double iso = model.isolation_db(freq_hz, pair, scheme);
    return std::polar(db_to_amplitude(-iso), model.leakage_phase(freq_hz, pair));
}

/// What the receiver sees around one sample: noise standard deviation in
/// the sample's units and the composite power hitting the ADC.
struct NoiseContext {
    double sigma = 0.0;
    double composite_power_dbm = kNegInf;
    double adc_ceiling_dbm = kPosInf;

    /// Clipping is modelled as an SNR penalty equal to the excess over the
    /// ceiling.
    [[nodiscard]] double saturation_penalty_db() const {
        return std::max(0.0, composite_power_dbm - adc_ceiling_dbm);
    }

    [[nodiscard]] double effective_sigma() const { return sigma * db_to_amplitude(saturation_penalty_db()); }
};

struct NoisySample {
    Complex value{};
    double snr_db = kPosInf;
};

/// Adds circular complex Gaussian noise. Always consumes two normal draws so
/// that arms with different noise levels stay aligned on the same stream.
inline NoisySample add_noise(Complex value, const NoiseContext& ctx, RandomStream& rng) {
    if (ctx.sigma < 0.0 || std::isnan(ctx.sigma)) throw ConfigError("noise sigma must be >= 0");
    const Complex z = rng.complex_normal();
    const double s = ctx.effective_sigma();
    NoisySample out;
    out.value = value + s * z;
    out.snr_db = s == 0.0 ? kPosInf : amplitude_to_db(std::abs(value) / s);
    return out;
}

/// Tags, reflectors and leakage behaviour of one scene.
struct Environment {
    std::vector<TagSpec> tags;
    std::vector<Scatterer> scatterers;
    InterferenceModel interference = InterferenceModel::with_default_nulling();

    /// Direct path first, then one path per scatterer.
    [[nodiscard]] std::vector<PathSpec> paths_for(const ReaderPose& pose, const TagSpec& tag) const {
        std::vector<PathSpec> out;
        out.reserve(1 + scatterers.size());
        out.push_back({0.0, 2.0 * tag.blocked_loss_db, tag.direct_blocked()});
        const double direct = reader_tag_distance(pose, tag);
        for (const Scatterer& s : scatterers) {
            const double via = (s.position - pose.position).norm() + (tag.position - s.position).norm();
            out.push_back({std::max(via - direct, 1e-3), s.loss_db, false});
        }
        return out;
    }
};

}  // namespace ccp
