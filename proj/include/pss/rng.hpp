#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "pss/error.hpp"

namespace pss {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 output is pinned by the standard and all
// distributions here are hand-inverted, so sequences are identical across
// platforms and standard libraries. Substreams keyed by (seed, index) make
// results independent of scheduling order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Zero-truncated Poisson via CDF inversion: P(k) ∝ rate^k / k!, k >= 1.
    std::uint64_t poisson_zero_truncated(double rate) {
        if (!(rate > 0.0) || rate > 700.0)
            throw ValidationError("poisson rate must be in (0, 700]");
        const double denom = -std::expm1(-rate); // 1 - e^{-rate}
        double term = rate * std::exp(-rate) / denom;
        double cum = term;
        const double u = uniform01();
        std::uint64_t k = 1;
        while (u >= cum) {
            ++k;
            term *= rate / static_cast<double>(k);
            cum += term;
            if (term < 1e-18 && cum < u) break; // numeric tail guard
        }
        return k;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace pss
