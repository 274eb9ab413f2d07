#pragma once

#include <cstdint>
#include <random>

namespace qksa {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// Stream tags so that the environment, policy and mutation draws never share a sequence.
namespace streams {
inline constexpr std::uint64_t environment = 1;
inline constexpr std::uint64_t policy = 2;
inline constexpr std::uint64_t mutation = 3;
}  // namespace streams

// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace qksa
