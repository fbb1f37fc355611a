#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace uad {

// Seeded random stream with draw primitives pinned to mt19937_64 output,
// so results are reproducible across standard library implementations
// (std::uniform_int_distribution and friends are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound), bound >= 1. Rejection sampling, no
    // modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double canonical() { return (engine_() >> 11) * 0x1.0p-53; }

    // Index drawn from an (unnormalized is fine) nonnegative weight vector.
    std::size_t weighted(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = canonical() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace uad
