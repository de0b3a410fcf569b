#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wavexp {

/// Deterministic random source. All distribution transforms are written out
/// explicitly so streams are reproducible across standard libraries; only the
/// mt19937_64 engine (whose output sequence the standard pins) is reused.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed), seed_mix_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(next_double()) * (hi - lo);
    }

    /// Box-Muller, no cached spare so consumption per call is fixed.
    float normal(float mean, float stddev) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * static_cast<float>(z);
    }

    /// Uniform integer in [0, n).
    uint64_t next_index(uint64_t n) {
        return static_cast<uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    /// Independent child stream for (seed, index) schemes; splitmix64 mixing
    /// keeps nearby indices decorrelated.
    Rng derive(uint64_t index) const {
        uint64_t z = seed_mix_ + index * 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

    static Rng with_stream(uint64_t seed, uint64_t stream) {
        return Rng(seed).derive(stream);
    }

  private:
    std::mt19937_64 engine_;
    uint64_t seed_mix_ = 0;
};

}  // namespace wavexp
