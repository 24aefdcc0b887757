#pragma once

#include "slcb/types.hpp"

#include <cmath>
#include <cstdint>

namespace slcb {

/// Stream tags for hierarchical seed derivation.
enum class Stream : std::uint64_t {
  World = 1,      // theta* and arm feature vectors, fixed across epochs
  Instance = 2,   // per-epoch user contexts
  Noise = 3,
  Mechanism = 4,
  Run = 5,
  Arm = 6,
  Deviation = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for (stream, index) under `parent`. Distinct children never
/// share a sequence, so adding draws to one component leaves others intact.
constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(parent ^ splitmix64(static_cast<std::uint64_t>(stream))) +
                    index);
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double canonical(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> uniform_on_sphere(Index dim, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(dim);
  Scalar norm = 0;
  do {
    for (Index k = 0; k < dim; ++k) v(k) = normal(rng);
    norm = v.norm();
  } while (norm == Scalar(0));
  return v / norm;
}

/// Vector of independent +1/-1 entries.
inline Vec random_signs(Index dim, Rng& rng) {
  Vec v(dim);
  for (Index k = 0; k < dim; ++k) v(k) = (rng() >> 63) ? 1.0 : -1.0;
  return v;
}

}  // namespace slcb
