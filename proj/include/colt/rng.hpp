#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace colt {

// All randomness flows through these helpers so results depend only on the
// seeds in the experiment config, never on libstdc++ distribution internals.
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// SplitMix64 finalizer; derives independent stream seeds from one base seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// 24 high bits -> [0,1) with exact float spacing.
inline float uniform_float(Rng& rng, float lo, float hi) {
  const float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
  return lo + (hi - lo) * u;
}

inline double uniform_double01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller, one value per call; the spare is discarded to keep the stream
// position independent of call history.
inline float normal_float(Rng& rng, float mean, float stddev) {
  const double u1 = 1.0 - uniform_double01(rng);  // (0,1]
  const double u2 = uniform_double01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * static_cast<float>(r * std::cos(6.283185307179586 * u2));
}

// Uniform integer in [0, n) by rejection.
inline uint64_t bounded_u64(Rng& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates with our own bounded draw, so the permutation is identical
// across standard library implementations.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(bounded_u64(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace colt
