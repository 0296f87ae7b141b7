#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace gwprof {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent child seeds from a root seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(root) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// The samplers below avoid std::*_distribution so that corpora are identical
// across standard library implementations.

inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double normal(Rng& rng, double mean, double sd) { return mean + sd * standard_normal(rng); }

/// Lognormal parameterised by its median and the sd of the underlying normal.
inline double lognormal(Rng& rng, double median, double sigma) {
    return median * std::exp(sigma * standard_normal(rng));
}

inline int poisson(Rng& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda > 30.0) {
        return std::max(0, static_cast<int>(std::lround(normal(rng, lambda, std::sqrt(lambda)))));
    }
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = uniform01(rng);
    while (p > limit) {
        ++k;
        p *= uniform01(rng);
    }
    return k;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(rng() % span);
}

}  // namespace gwprof
