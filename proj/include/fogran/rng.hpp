#pragma once

// Reproducible random streams. Every simulation owns one std::mt19937_64
// (fully specified by the standard, so draws match across platforms) seeded
// from a root seed and a path of integer ids through SplitMix64 mixing.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fogran {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for a child stream identified by `path` under `root`. Distinct paths
/// give independent streams regardless of the order they are requested in.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t id : path) h = splitmix64(h ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
  return h;
}

/// FNV-1a, for turning policy labels into stream ids.
inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(root, path));
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fair coin from one draw.
inline bool coin_flip(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace fogran
