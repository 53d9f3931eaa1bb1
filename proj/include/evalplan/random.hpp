#pragma once

// All stochastic code uses std::mt19937_64. Independent streams (one per
// trial) are seeded with splitmix64(seed ^ splitmix64(stream index)), so a
// trial's draws depend only on the user seed and its own index.

#include <cstdint>
#include <random>

namespace evalplan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(stream_seed(seed, stream));
}

}  // namespace evalplan
