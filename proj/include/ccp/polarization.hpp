// SPDX-License-Identifier: Apache-2.0
//
// Jones-calculus algebra for synthesized polarizations.
//
// All angles are measured from the horizontal axis of the reader aperture:
// a linear state at angle t is [cos t, sin t]. Circular states put the
// vertical branch a quarter period behind the horizontal one.

#pragma once

#include <cmath>

#include "ccp/common.hpp"

namespace ccp {

/// In-plane polarization angle of a tag, normalized to [-pi, pi).
class TagAngle {
public:
    constexpr TagAngle() = default;
    explicit TagAngle(double radians) : theta_(wrap_angle(radians)) {}

    static TagAngle degrees(double deg) { return TagAngle(deg_to_rad(deg)); }

    [[nodiscard]] double radians() const noexcept { return theta_; }

private:
    double theta_ = 0.0;
};

/// Field amplitudes along the (horizontal, vertical) antenna axes.
struct JonesVector {
    Complex h{};
    Complex v{};

    [[nodiscard]] double norm_squared() const noexcept { return std::norm(h) + std::norm(v); }

    [[nodiscard]] JonesVector normalized() const {
        const double n = std::sqrt(norm_squared());
        return {h / n, v / n};
    }

    friend JonesVector operator*(Complex s, const JonesVector& j) { return {s * j.h, s * j.v}; }
};

inline JonesVector make_linear(TagAngle theta) {
    const double t = theta.radians();
    return {Complex(std::cos(t), 0.0), Complex(std::sin(t), 0.0)};
}

/// Right-hand circular: (1/sqrt2) [1, e^{-j pi/2}].
inline JonesVector make_rhcp() {
    const double a = 1.0 / std::sqrt(2.0);
    return {Complex(a, 0.0), Complex(0.0, -a)};
}

inline JonesVector make_lhcp() {
    const double a = 1.0 / std::sqrt(2.0);
    return {Complex(a, 0.0), Complex(0.0, a)};
}

/// Inner product of two states. The plain form is the leakage convention
/// between a transmitter and a co-located receiver; the conjugated form is
/// the coupling of a transmitted field into a facing antenna.
inline Complex project(const JonesVector& a, const JonesVector& b, bool conjugate_b) {
    if (conjugate_b) return a.h * std::conj(b.h) + a.v * std::conj(b.v);
    return a.h * b.h + a.v * b.v;
}

/// Field amplitude picked up by a linearly polarized tag.
inline Complex tag_coupling(const JonesVector& tx, TagAngle tag) {
    return project(tx, make_linear(tag), true);
}

/// Round-trip polarization scalar: transmitter -> tag -> receiver. The tag
/// re-radiates along its own linear axis.
inline Complex backscatter_factor(const JonesVector& tx, const JonesVector& rx, TagAngle tag) {
    return tag_coupling(tx, tag) * project(make_linear(tag), rx, false);
}

/// Commercial single-feed circular patch. Two orthogonal resonant modes are
/// detuned around the centre frequency so that they sit +/-45 degrees apart
/// there, giving exact RHCP at f0 (up to a common phase) and an elliptical,
/// attenuated state away from it. Used for the fixed-antenna baselines.
struct ResonantPatch {
    double center_hz = 915e6;
    double quality = 20.0;

    [[nodiscard]] JonesVector at(double freq_hz) const {
        const double split = 1.0 / (2.0 * quality);
        const double f_h = center_hz / (1.0 - split);
        const double f_v = center_hz / (1.0 + split);
        auto mode = [&](double f_res) {
            return 1.0 / Complex(1.0, 2.0 * quality * (freq_hz / f_res - 1.0));
        };
        return {mode(f_h), mode(f_v)};
    }
};

}  // namespace ccp
