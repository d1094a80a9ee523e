#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace adgnn {

// Deterministic helpers on top of mt19937_64. std::uniform_int_distribution
// and friends are implementation-defined, so anything that must reproduce
// bit-for-bit across toolchains goes through these.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9E3779B97F4A7C15ULL + b));
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Uniform draw in [0, n). n must be > 0.
inline std::size_t rng_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

/// Uniform double in [0, 1) with 53 bits of randomness.
inline double rng_uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double rng_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * rng_uniform01(rng);
}

/// In-place Fisher-Yates shuffle.
template <typename T>
void rng_shuffle(std::mt19937_64& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Uniform k-subset of [0, n) without replacement, in draw order.
std::vector<std::size_t> rng_sample_without_replacement(std::mt19937_64& rng,
                                                        std::size_t n,
                                                        std::size_t k);

}  // namespace adgnn
