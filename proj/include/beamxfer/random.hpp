#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace beamxfer {

using Rng = std::mt19937_64;

// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based seed derivation: the same (master, path) always yields the
// same stream seed, independent of how many other streams were drawn.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

// Tags keep derived streams for different pipeline stages apart.
enum class SeedTag : std::uint64_t {
    City = 1,
    Split = 2,
    Init = 3,
    Shuffle = 4,
    Subsample = 5,
    FineTune = 6,
    Reference = 7,
    Baseline = 8,
};

constexpr std::uint64_t tag(SeedTag t) { return static_cast<std::uint64_t>(t); }

// Unbiased integer in [0, bound) using rejection on the raw 64-bit stream, so
// results do not depend on the standard library's distribution code.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Real in [0, 1) from the top 53 bits.
double uniform_unit(Rng& rng);

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

// Uniformly random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

}  // namespace beamxfer
