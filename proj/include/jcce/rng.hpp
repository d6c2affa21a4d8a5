#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace jcce {

/// Seeded pseudo-random stream. Wraps std::mt19937_64, whose output sequence
/// is fixed by the standard, and derives every variate from raw 64-bit draws
/// so results do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }
    double normal();
    double exponential(double mean);

    /// Index drawn proportionally to non-negative weights.
    std::size_t categorical(std::span<const double> weights);

    /// Independent child stream; same (seed, stream) always gives the same child.
    Rng fork(std::uint64_t stream) const;

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finaliser, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace jcce
