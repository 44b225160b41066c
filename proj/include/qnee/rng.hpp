#pragma once

#include <cstdint>
#include <random>

namespace qnee {

// splitmix64 finalizer; used to derive independent, reproducible stream
// seeds from a base seed plus structural tags (trial, iteration, coordinate).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <class... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, Rest... rest) {
  return mix_seed(splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ull)), rest...);
}

// Uniform double in [0, 1) with 53 random bits. Identical results for a given
// engine state on every platform, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace qnee
