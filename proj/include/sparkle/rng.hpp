#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace sparkle {

/// Seeded random stream with fully specified draw algorithms.
///
/// std::uniform_real_distribution and std::normal_distribution are
/// implementation-defined, which would break byte-identical replay across
/// toolchains, so the transformations are spelled out here. One stream per
/// run; never shared across threads.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in {0, ..., n-1}, unbiased via rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - n + 1;
        for (;;) {
            const std::uint64_t x = engine_();
            const std::uint64_t r = x % n;
            if (x - r <= limit) return r;
        }
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        return radius * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

private:
    std::mt19937_64 engine_;
};

} // namespace sparkle
