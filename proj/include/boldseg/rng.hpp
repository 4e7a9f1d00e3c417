#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "boldseg/core.hpp"

namespace boldseg {

// Deterministic random stream. The uniform/normal mappings are implemented
// here (not via std distributions) so a seed produces the same draw sequence
// on every platform and standard library.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draw_count() const { return draws_; }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    int uniform_int(int lo, int hi) {
        require(lo <= hi, ErrKind::internal, "uniform_int: empty range");
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(span));
        if (k >= span) k = span - 1;
        return lo + static_cast<int>(k);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; two engine draws per call, no caching,
    // so the draw counter stays in lockstep with the value sequence.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Independent child stream, e.g. one per sample or per frame.
    RngStream fork(std::uint64_t salt) const {
        // splitmix-style mix keeps child seeds decorrelated from small salts
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (salt + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return RngStream(z ^ (z >> 31));
    }

private:
    std::uint64_t next() {
        ++draws_;
        return eng_();
    }

    std::uint64_t seed_;
    std::mt19937_64 eng_;
    std::uint64_t draws_ = 0;
};

}  // namespace boldseg
