// SPDX-License-Identifier: Apache-2.0
//
// From raw 2x2 wideband channels to an orientation-independent per-hop
// channel and a one-dimensional time-of-flight distance.

#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <vector>

#include "ccp/common.hpp"
#include "ccp/polarization.hpp"
#include "ccp/protocol.hpp"

namespace ccp {

struct CombinedHop {
    double freq_hz = 0.0;
    Complex g{};
    double sigma = 0.0;

    [[nodiscard]] double snr_db() const {
        return sigma == 0.0 ? kPosInf : amplitude_to_db(std::abs(g) / sigma);
    }
};

struct DelayProfile {
    std::vector<double> distance_m;
    std::vector<double> power;

    void write_csv(std::ostream& os) const {
        os << "distance_m,power\n";
        for (std::size_t i = 0; i < distance_m.size(); ++i) os << distance_m[i] << ',' << power[i] << '\n';
    }
};

/// Tag axis from the co-polarized magnitudes, returned modulo pi. The
/// magnitude ratio fixes the angle within [0, pi/2]; the sign of the
/// cross-polarized terms relative to the co-polarized ones picks the
/// quadrant, without which rolls in (pi/2, pi) would combine destructively.
inline TagAngle estimate_tag_angle(const WidebandChannel& ch) {
    if (ch.hops.empty()) throw EstimationUnavailable("empty channel");
    double sum_h = 0.0, sum_v = 0.0;
    Complex cross_corr{};
    for (const HopChannel& hop : ch.hops) {
        sum_h += std::abs(hop.h[kHH]);
        sum_v += std::abs(hop.h[kVV]);
        cross_corr += (hop.h[kVH] + hop.h[kHV]) * std::conj(hop.h[kHH] + hop.h[kVV]);
    }
    if (sum_h == 0.0 && sum_v == 0.0) throw EstimationUnavailable("no co-polarized energy");
    const double n = static_cast<double>(ch.hops.size());
    // rms over hops of |h|^(1/2) is sqrt(mean |h|).
    double theta = std::atan2(std::sqrt(sum_v / n), std::sqrt(sum_h / n));
    if (cross_corr.real() < 0.0) theta = kPi - theta;
    return TagAngle(theta);
}

/// Least-squares projection of the 2x2 entries onto the rank-one tag
/// template (cos^2, sin cos, sin cos, sin^2).
inline std::vector<CombinedHop> combine_channels(const WidebandChannel& ch, TagAngle theta) {
    std::vector<CombinedHop> out;
    out.reserve(ch.hops.size());
    if (ch.single_entry) {
        for (const HopChannel& hop : ch.hops) out.push_back({hop.freq_hz, hop.h[kHH], hop.sigma[kHH]});
        return out;
    }
    const double c = std::cos(theta.radians());
    const double s = std::sin(theta.radians());
    const std::array<double, 4> w{c * c, s * c, s * c, s * s};
    double w2 = 0.0;
    for (double x : w) w2 += x * x;
    for (const HopChannel& hop : ch.hops) {
        Complex g{};
        double var = 0.0;
        for (std::size_t e = 0; e < 4; ++e) {
            g += w[e] * hop.h[e];
            var += w[e] * w[e] * hop.sigma[e] * hop.sigma[e];
        }
        out.push_back({hop.freq_hz, g / w2, std::sqrt(var) / w2});
    }
    return out;
}

/// Single fixed pair: the horizontal transmit/receive entry only.
inline std::vector<CombinedHop> horizontal_only(const WidebandChannel& ch) {
    std::vector<CombinedHop> out;
    out.reserve(ch.hops.size());
    for (const HopChannel& hop : ch.hops) out.push_back({hop.freq_hz, hop.h[kHH], hop.sigma[kHH]});
    return out;
}

struct TofOptions {
    double max_range_m = 5.0;
    double step_m = 0.01;
    /// Candidate peaks must reach this fraction of the global maximum.
    double beta = 0.5;
    /// Hamming weights across the hop band; suppresses the sidelobes a
    /// strong late reflection throws onto the direct-path peak.
    bool taper = true;
};

struct TofResult {
    double distance_m = 0.0;
    DelayProfile profile;
};

/// Hamming weight per hop by its position in the band, padded by the mean
/// hop spacing so the edge hops keep useful weight.
inline std::vector<double> hop_taper(std::span<const CombinedHop> hops) {
    std::vector<double> w(hops.size(), 1.0);
    if (hops.size() < 3) return w;
    const auto [lo, hi] = std::minmax_element(hops.begin(), hops.end(),
                                              [](const auto& a, const auto& b) { return a.freq_hz < b.freq_hz; });
    const double span = hi->freq_hz - lo->freq_hz;
    if (!(span > 0.0)) return w;
    const double pad = span / static_cast<double>(hops.size() - 1);
    for (std::size_t i = 0; i < hops.size(); ++i) {
        const double u = (hops[i].freq_hz - lo->freq_hz + pad) / (span + 2.0 * pad);
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * u);
    }
    return w;
}

inline DelayProfile delay_profile(std::span<const CombinedHop> hops, double max_range_m, double step_m,
                                  std::span<const double> weights = {}) {
    DelayProfile p;
    const auto n = static_cast<std::size_t>(std::floor(max_range_m / step_m + 1e-9)) + 1;
    p.distance_m.resize(n);
    p.power.resize(n);
    // Each hop's steering phasor advances by a fixed rotation per grid step.
    std::vector<Complex> z(hops.size()), rot(hops.size());
    for (std::size_t k = 0; k < hops.size(); ++k) {
        z[k] = (weights.empty() ? 1.0 : weights[k]) * hops[k].g;
        rot[k] = std::polar(1.0, 4.0 * kPi * hops[k].freq_hz * step_m / kSpeedOfLight);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{};
        for (std::size_t k = 0; k < z.size(); ++k) {
            acc += z[k];
            z[k] *= rot[k];
        }
        p.distance_m[i] = static_cast<double>(i) * step_m;
        p.power[i] = std::abs(acc);
    }
    return p;
}

/// Earliest local maximum of the delay profile that reaches beta times the
/// global maximum (the direct path arrives first).
inline TofResult tof_estimate(std::span<const CombinedHop> hops, const TofOptions& opt = {}) {
    if (hops.size() < 2) throw EstimationUnavailable("time of flight needs at least two hops");
    if (std::all_of(hops.begin(), hops.end(), [](const CombinedHop& h) { return h.g == Complex{}; }))
        throw EstimationUnavailable("all-zero channel");
    TofResult r;
    const std::vector<double> w = opt.taper ? hop_taper(hops) : std::vector<double>{};
    r.profile = delay_profile(hops, opt.max_range_m, opt.step_m, w);
    auto& p = r.profile.power;
    const double peak = *std::max_element(p.begin(), p.end());
    for (double& x : p) x /= peak;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || p[i] >= p[i - 1];
        const bool right = i + 1 == n || p[i] >= p[i + 1];
        if (left && right && p[i] >= opt.beta) {
            r.distance_m = r.profile.distance_m[i];
            return r;
        }
    }
    // Unreachable: the global maximum always qualifies.
    r.distance_m = r.profile.distance_m[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
    return r;
}

/// Distance of the first grating lobe of the plan's delay profile: after
/// leaving the main lobe (profile below eta), the first local maximum that
/// climbs back to eta times the zero-delay peak. Scans 1 cm steps to 20 m.
/// This is a property of the hop set alone, so no taper is applied.
inline double unaliased_range(const FrequencyPlan& plan, double eta = 0.6) {
    std::vector<CombinedHop> ones;
    for (double f : plan.hops) ones.push_back({f, Complex(1.0, 0.0), 0.0});
    const double limit = 20.0;
    DelayProfile p = delay_profile(ones, limit, 0.01);
    const double p0 = p.power.front();
    std::size_t i = 1;
    while (i < p.power.size() && (p.distance_m[i] <= 0.05 || p.power[i] >= eta * p0)) ++i;
    for (; i + 1 < p.power.size(); ++i) {
        if (p.power[i] >= eta * p0 && p.power[i] >= p.power[i - 1] && p.power[i] >= p.power[i + 1])
            return p.distance_m[i];
    }
    return limit;
}

inline Complex apply_nulling(Complex raw_rx, Complex leakage_estimate) { return raw_rx - leakage_estimate; }

}  // namespace ccp
