#pragma once

#include <cstdint>
#include <random>

namespace exemplar {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream tags keep the substreams of different pipeline stages apart.
enum class Stream : std::uint64_t {
  threshold = 1,
  sampling = 2,
  augment = 3,
  init = 4,
  shuffle = 5,
  dropout = 6,
  split = 7,
  pretrain = 8,
  svm = 9,
  synth = 10,
};

/// Deterministic substream: seed = mix(mix(seed ^ tag) + index).
inline Rng substream(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
  return Rng(mix64(mix64(seed ^ (static_cast<std::uint64_t>(tag) << 56)) + index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
  return std::uniform_int_distribution<int>(lo, hi_inclusive)(rng);
}

}  // namespace exemplar
