// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams. Every stochastic draw in the simulator goes through
// a RandomStream so that (seed, stream key) fully determines the output and
// ablation arms can prove they consumed identical draws.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ccp/common.hpp"

namespace ccp {

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based derivation: the stream for (master, k0, k1, ...) does not
/// depend on how many other streams were created before it.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = mix_seed(master);
    for (auto k : keys) s = mix_seed(s ^ mix_seed(k + 0x632be59bd9b4e019ULL));
    return s;
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent stream keyed off this stream's seed (not its position).
    [[nodiscard]] RandomStream child(std::initializer_list<std::uint64_t> keys) const {
        return RandomStream(derive_seed(seed_, keys));
    }

    double uniform(double lo, double hi) {
        ++draws_;
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double sigma = 1.0) {
        ++draws_;
        return std::normal_distribution<double>(mean, sigma)(engine_);
    }

    /// Circular complex Gaussian with E|z|^2 = 1.
    Complex complex_normal() {
        const double s = 1.0 / std::sqrt(2.0);
        const double re = normal(0.0, s);
        const double im = normal(0.0, s);
        return {re, im};
    }

    std::size_t index(std::size_t n) {
        ++draws_;
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

}  // namespace ccp
