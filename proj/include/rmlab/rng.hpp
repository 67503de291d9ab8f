#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace rmlab {

// Counter-based splittable random streams.
//
// Every consumer derives its own 64-bit stream key by mixing
// (seed, trial, coordinates). Values drawn from a keyed stream depend only
// on the key and the draw index, never on the order in which other streams
// are consumed, so sampling is reproducible under any parallel schedule.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    // SplitMix64 output function over a 64-bit counter.
    static std::uint64_t scramble(std::uint64_t& state) {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
        std::uint64_t s = h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
        return scramble(s);
    }

    static RngStream keyed(std::uint64_t seed, std::uint64_t trial,
                           std::uint64_t a = 0, std::uint64_t b = 0) {
        return RngStream(mix(mix(mix(seed, trial), a), b));
    }

    std::uint64_t next_u64() { return scramble(state_); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard real Gaussian via Marsaglia's polar method; pairs are cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

    // Standard complex Gaussian: E[g] = 0, E[|g|^2] = 1, E[g^2] = 0.
    std::complex<double> normal_complex() {
        const double inv_sqrt2 = 0.7071067811865475244;
        double re = normal();
        double im = normal();
        return {re * inv_sqrt2, im * inv_sqrt2};
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rmlab
