#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nsl {

// Deterministic stream derivation: every consumer of randomness owns an
// engine derived from (root seed, stream index), so reordering work units
// never changes what any unit draws.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

    // 53-bit mantissa uniform in [0, 1)
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller, cosine branch only: one normal per two uniforms, no
    // cached second value, so the draw sequence is position-independent.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n) by rejection, unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace nsl
