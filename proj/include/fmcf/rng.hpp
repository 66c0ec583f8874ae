#pragma once

#include <cmath>
#include <cstdint>

namespace fmcf {

// Seeding and sampling use a fixed published 64-bit mixer so that every
// integer-seeded quantity is bit-identical across platforms. The mix constants
// are the SplitMix64 ones (Steele, Lea, Flood 2014).

/// One SplitMix64 mixing round.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Combine a key into a running hash state.
inline std::uint64_t hash_combine(std::uint64_t state, std::uint64_t key) {
    return mix64(state ^ mix64(key));
}

/// Tiny counter-based generator: a SplitMix64 stream from a mixed seed.
/// Streams derived from distinct (seed, key...) tuples are independent for
/// every practical purpose and reproduce bit-exactly everywhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [a, b).
    double next_double(double a, double b) { return a + (b - a) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Poisson by inversion (sequential search); intended for small means.
    int next_poisson(double mean) {
        double u = next_double();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u >= cdf && k < 1024) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

private:
    std::uint64_t state_;
};

/// Stream seeded from an arbitrary tuple of keys.
template <typename... Keys>
SplitMix64 stream_for(std::uint64_t seed, Keys... keys) {
    std::uint64_t s = mix64(seed);
    ((s = hash_combine(s, static_cast<std::uint64_t>(keys))), ...);
    return SplitMix64(s);
}

} // namespace fmcf
