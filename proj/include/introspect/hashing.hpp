#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace introspect::hashing {

// FNV-1a, used wherever a hash must be stable across runs and platforms
// (std::hash makes no such promise).
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
  std::uint64_t h = seed;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

inline std::mt19937_64 stable_rng(std::uint64_t seed, std::string_view key) {
  return std::mt19937_64(combine(seed, fnv1a64(key)));
}

// Uniform double in [lo, hi) derived from a stable key, independent of any
// generator state.
inline double stable_uniform(std::uint64_t seed, std::string_view key, double lo, double hi) {
  const std::uint64_t h = combine(seed, fnv1a64(key));
  const double unit = static_cast<double>(h >> 11) / 9007199254740992.0;  // 2^53
  return lo + unit * (hi - lo);
}

}  // namespace introspect::hashing
