#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dynbandit {

/**
 * SplitMix64 mixer. Used both as a tiny standalone generator and as the
 * counter-based seed splitter: every replicate, arm trajectory, and
 * per-(arm, step) reward draw gets its own stream derived from one master
 * seed, so experiments replay bit-identically and policy randomness never
 * perturbs the environment.
 */
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

/// k-th child seed of `seed` under a fixed counter-based split.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g{seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))};
  g.next();
  return g.next();
}

/// Two-level split for (stream, substream) pairs such as (arm, step).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return split_seed(split_seed(seed, a), b);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

/// Uniform double in [0, 1) with 53 random bits, independent of libstdc++
/// distribution internals so the same seed reproduces the same stream.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller; draws exactly two uniforms per call.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

/// Single counter-addressed uniform in [0, 1); one substream of length one.
inline double uniform01_at(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  SplitMix64 g{split_seed(seed, a, b)};
  return static_cast<double>(g.next() >> 11) * 0x1.0p-53;
}

}  // namespace dynbandit
