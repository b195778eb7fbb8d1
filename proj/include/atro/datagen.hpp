#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "atro/error.hpp"
#include "atro/ingest.hpp"
#include "atro/rng.hpp"

namespace atro {

/// Two isotropic Gaussian clusters centred at -/+ (separation/2) e_1 with standard deviation `spread`.
/// Labels alternate so the classes are balanced; the sample order is fixed by the seed.
inline Dataset gaussian_clusters(std::size_t n, std::size_t d, double separation, double spread,
                                 std::uint64_t seed) {
  if (n == 0 || d == 0) throw ConfigError("data.n", "n and d must be positive");
  if (!(spread > 0.0)) throw ConfigError("data.spread", "must be > 0");
  Rng rng(seed);
  Dataset ds{{}, d, "gaussian_clusters"};
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = i % 2 == 0 ? 1 : -1;
    LabeledSample s{Vector(d), y};
    for (auto& v : s.x) v = spread * standard_normal(rng);
    s.x[0] += 0.5 * separation * y;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Interleaving half circles in 2-D with Gaussian jitter.
inline Dataset two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n == 0) throw ConfigError("data.n", "must be positive");
  if (!(noise >= 0.0)) throw ConfigError("data.noise", "must be >= 0");
  Rng rng(seed);
  Dataset ds{{}, 2, "two_moons"};
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = i % 2 == 0 ? 1 : -1;
    const double t = std::numbers::pi * uniform01(rng);
    LabeledSample s{Vector(2), y};
    if (y > 0) {
      s.x[0] = std::cos(t);
      s.x[1] = std::sin(t);
    } else {
      s.x[0] = 1.0 - std::cos(t);
      s.x[1] = 0.5 - std::sin(t);
    }
    s.x[0] += noise * standard_normal(rng);
    s.x[1] += noise * standard_normal(rng);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace atro
