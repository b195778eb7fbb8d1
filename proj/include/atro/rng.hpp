#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace atro {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to fan one master seed out into independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named sub-streams of a run's master seed.
enum class SeedStream : std::uint64_t {
  split = 1,
  init = 2,
  attack = 3,
  monte_carlo = 4,
  features = 5,
  folds = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) noexcept {
  return mix_seed(mix_seed(master) ^ static_cast<std::uint64_t>(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master) + 0x632BE59BD9B4E019ULL * (index + 1));
}

/// Uniform in [0, 1) from the top 53 bits; independent of the standard library's distributions.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Standard normal via Box-Muller (one draw per call, second value discarded).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Rademacher sign: -1 or +1 with equal probability.
inline double rademacher(Rng& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

}  // namespace atro
