// SPDX-License-Identifier: Apache-2.0
//
// Shared constants, unit helpers and error types.

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ccp {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = std::numbers::pi;

/// SNR recorded for a read that could not be decoded.
inline constexpr double kUnreadSnrDb = -30.0;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

inline double amplitude_to_db(double amp) {
    return amp <= 0.0 ? kNegInf : 20.0 * std::log10(amp);
}

inline double power_to_db(double p) {
    return p <= 0.0 ? kNegInf : 10.0 * std::log10(p);
}

/// Power sum of two dBm levels.
inline double db_add(double a_db, double b_db) {
    if (a_db == kNegInf) return b_db;
    if (b_db == kNegInf) return a_db;
    return power_to_db(db_to_power(a_db) + db_to_power(b_db));
}

/// Wraps to [-pi, pi).
inline double wrap_angle(double a) {
    double w = std::fmod(a + kPi, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w - kPi;
}

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// Free-space path loss 20*log10(4*pi*d*f/c), dB.
inline double free_space_path_loss_db(double freq_hz, double distance_m) {
    return 20.0 * std::log10(4.0 * kPi * distance_m * freq_hz / kSpeedOfLight);
}

// Error taxonomy. Per-tag failures inside batch operations are reported as
// data; these are raised only for contract violations.

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EstimationUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ccp
