#pragma once

#include <cstdint>
#include <random>

namespace epsense {

// Seed derivation. Every stochastic component draws from its own engine whose
// seed is a pure function of (root seed, stream indices), so any piece of a
// problem can be regenerated independently and scheduling order never matters.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return detail::splitmix64(detail::splitmix64(root) ^ detail::splitmix64(stream + 0x1234567ULL));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t idx1, std::uint64_t idx2) {
    return derive_seed(derive_seed(root, idx1), idx2 + 0x9e3779b9ULL);
}

// Stream ids for the components of a generated problem.
enum : std::uint64_t {
    kStreamSignal = 1,
    kStreamMatrix = 2,
    kStreamNoise = 3,
};

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace epsense
