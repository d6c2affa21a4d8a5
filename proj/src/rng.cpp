#include "jcce/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jcce {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    // Box-Muller; the second variate is discarded to keep the stream stateless.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double mean) {
    return -mean * std::log1p(-uniform());
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (weights.empty() || !(total > 0.0)) {
        throw std::invalid_argument("Rng::categorical: weights must have positive mass");
    }
    const double r = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

Rng Rng::fork(std::uint64_t stream) const {
    return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x5851f42d4c957f2dULL)));
}

}  // namespace jcce
