#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace taco {

// splitmix64 finalizer; used to derive independent, reproducible streams
// from (seed, index) pairs without sharing generator state.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic random source. All derived quantities (uniform doubles,
// Bernoulli draws, shuffles) are computed from raw mt19937_64 output so
// results do not depend on the standard library's distribution code.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform index in [0, n) via 128-bit multiply (no modulo bias worth
    // caring about at these ranges, and portable).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

// Stateless per-step stream: every training step draws from its own
// generator keyed by (seed, step), which makes resumed runs bit-identical
// to uninterrupted ones.
inline Rng rng_for_step(std::uint64_t seed, std::uint64_t step) {
    return Rng(mix64(seed ^ mix64(step)));
}

}  // namespace taco
