#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nos {

/// Deterministic random source. Every consumer derives a named substream from
/// the run seed, so adding a case or a model never perturbs existing streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    /// Independent stream keyed by `name`; stable across runs and platforms.
    Rng substream(std::string_view name) const;

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform double in [0, 1) built from the top 53 bits of the engine.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; portable unlike std::normal_distribution.
    double normal();

    std::uint64_t next_u64() { return engine_(); }

    /// Fisher-Yates shuffle of indices 0..n-1.
    template <typename Container>
    void shuffle(Container& c) {
        for (std::size_t i = c.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(engine_() % i);
            std::swap(c[i - 1], c[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace nos
