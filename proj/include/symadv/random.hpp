#pragma once

#include <cstdint>
#include <random>

namespace symadv {

/// The engine used everywhere; all draws below are implemented by hand so the
/// sequence for a given seed does not depend on the standard library vendor.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent child seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n); n must be positive.
inline std::uint64_t random_index(Rng& rng, std::uint64_t n) {
    // rejection sampling on the top of the range removes modulo bias
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

inline bool random_bit(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace symadv
