#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atro/error.hpp"
#include "atro/ingest.hpp"
#include "atro/linalg.hpp"
#include "atro/loss.hpp"
#include "atro/model.hpp"
#include "atro/rng.hpp"

namespace atro {

struct BoundConfig {
  std::optional<double> W;  // nullopt: take it from the model, see default_norm_bound
  double p = 2.0;           // primal norm of the parameter ball; q is its dual
  double delta = 0.05;      // confidence level
  double eps = 0.0;
  SurrogateParams params;
  int mc_draws = 1000;

  double q() const { return dual_exponent(p); }

  void validate(const std::string& prefix = "bound") const {
    if (W && !(*W > 0.0 && std::isfinite(*W))) throw ConfigError(prefix + ".W", "must be > 0");
    if (!(p >= 1.0)) throw ConfigError(prefix + ".p", "must be >= 1 (inf allowed)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError(prefix + ".delta", "must lie in (0, 1)");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError(prefix + ".eps", "must be >= 0");
    if (mc_draws < 1) throw ConfigError(prefix + ".mc_draws", "must be >= 1");
    params.validate(prefix);
  }

  bool operator==(const BoundConfig&) const = default;
};

/// Monte-Carlo estimate of the empirical Rademacher complexity of {x -> <w, x> : ||w||_p <= W},
/// using sup_w <w, s> = W ||s||_q with s = sum_i sigma_i x_i.
inline double rademacher_linear_mc(const std::vector<Vector>& xs, double W, double q, int mc_draws,
                                   std::uint64_t seed) {
  if (xs.empty()) throw Error("rademacher: empty sample");
  if (mc_draws < 1) throw ConfigError("bound.mc_draws", "must be >= 1");
  const std::size_t d = xs.front().size();
  Rng rng(seed);
  Vector s(d);
  double acc = 0.0;
  for (int k = 0; k < mc_draws; ++k) {
    std::fill(s.begin(), s.end(), 0.0);
    for (const auto& x : xs) axpy(rademacher(rng), x, s);
    acc += norm_p(s, q);
  }
  return W * acc / (static_cast<double>(mc_draws) * static_cast<double>(xs.size()));
}

enum class RadClass { standard_linear, adversarial_linear };

/// How the inner sup over the parameter ball is taken.
/// orthant: exact, via sup_{||w||_p<=W} <u, w> + nu ||w||_1 = W ||(|u| + nu)_+||_q.
/// grid: brute-force maximum over a grid of directions on the unit p-sphere (d <= 3), plus w = 0.
enum class SupMethod { orthant, grid };

inline constexpr std::size_t kExhaustiveMaxN = 12;
inline constexpr std::size_t kExhaustiveMaxD = 3;

namespace detail {

/// Grid of points on the unit p-sphere: a uniform grid on the surface of the cube [-1,1]^d, each point
/// rescaled to p-norm 1.
inline std::vector<Vector> sphere_grid(std::size_t d, double p, int per_axis) {
  std::vector<Vector> out;
  std::vector<int> idx(d, 0);
  Vector w(d);
  while (true) {
    bool on_face = false;
    for (std::size_t i = 0; i < d; ++i) {
      w[i] = -1.0 + 2.0 * idx[i] / (per_axis - 1);
      on_face = on_face || idx[i] == 0 || idx[i] == per_axis - 1;
    }
    if (on_face) {
      const double n = norm_p(w, p);
      Vector u = w;
      for (auto& v : u) v /= n;
      out.push_back(std::move(u));
    }
    std::size_t k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return out;
}

}  // namespace detail

/// Exhaustive empirical Rademacher complexity over all 2^n sign vectors (n <= 12, d <= 3).
/// standard_linear:    (1/n) E sup_w sum_i sigma_i <w, x_i>
/// adversarial_linear: (1/n) E sup_w sum_i sigma_i (<w, x_i> + eps ||w||_1)
/// The shift direction does not matter: flipping every sign maps one sign convention onto the other.
inline double rademacher_exhaustive(const std::vector<Vector>& xs, RadClass cls, double W, double q, double eps,
                                    SupMethod method = SupMethod::orthant, int grid_per_axis = 201) {
  const std::size_t n = xs.size();
  if (n == 0) throw Error("rademacher: empty sample");
  const std::size_t d = xs.front().size();
  if (n > kExhaustiveMaxN || d > kExhaustiveMaxD)
    throw Error("rademacher_exhaustive: needs n <= 12 and d <= 3, got n = " + std::to_string(n) +
                ", d = " + std::to_string(d));
  if (!(eps >= 0.0)) throw ConfigError("bound.eps", "must be >= 0");
  const double p = dual_exponent(q);
  const double shift = cls == RadClass::adversarial_linear ? eps : 0.0;

  std::vector<Vector> dirs;
  if (method == SupMethod::grid) dirs = detail::sphere_grid(d, p, grid_per_axis);

  double acc = 0.0;
  Vector u(d), v(d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::fill(u.begin(), u.end(), 0.0);
    double nu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (mask >> i) & 1 ? 1.0 : -1.0;
      axpy(s, xs[i], u);
      nu += s * shift;
    }
    if (method == SupMethod::orthant) {
      for (std::size_t j = 0; j < d; ++j) v[j] = std::max(std::abs(u[j]) + nu, 0.0);
      acc += W * norm_p(v, q);
    } else {
      double best = 0.0;  // w = 0
      for (const auto& w : dirs) best = std::max(best, dot(u, w) + nu * norm1(w));
      acc += W * best;
    }
  }
  return acc / (static_cast<double>(std::uint64_t{1} << n) * static_cast<double>(n));
}

/// Additive robustness slack eps W d^{1/q} / sqrt(n).
inline double eps_slack(double eps, double W, std::size_t d, double q, std::size_t n) {
  const double dq = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(d), 1.0 / q);
  return eps * W * dq / std::sqrt(static_cast<double>(n));
}

inline double confidence_term(double delta, std::size_t n) {
  return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

/// W = max(||theta||_p, ||zeta(+1)||_p, ||zeta(-1)||_p, ||gamma||_p) of a trained model.
inline double default_norm_bound(const RejectionModel& m, double p) {
  return std::max({norm_p(m.theta, p), norm_p(zeta(m, 1), p), norm_p(zeta(m, -1), p), norm_p(m.gamma, p)});
}

/// Mean of min(L_conv, 1) with the worst case over the l_inf ball, in feature space.
inline double clipped_empirical_risk(const RejectionModel& m, const Dataset& ds, double eps,
                                     const SurrogateParams& p) {
  if (ds.empty()) throw Error("clipped_empirical_risk: empty dataset");
  double acc = 0.0;
  for (const auto& s : ds.samples) acc += clipped_adv_surrogate(m, m.features(s.x), s.y, eps, p);
  return acc / static_cast<double>(ds.size());
}

struct BoundReport {
  double empirical_risk = 0.0;
  double rad_zeta = 0.0;   // (alpha L / 2) R over sample points y_i phi(x_i)
  double rad_gamma = 0.0;  // beta c L R over sample points phi(x_i)
  double eps_term = 0.0;
  double conf_term = 0.0;
  double total = 0.0;
  double W = 0.0;
  double q = 2.0;
  std::size_t n = 0;
  std::size_t d = 0;
};

/// Generalization bound for the adversarial surrogate risk of a linear-in-feature model:
/// empirical_risk + (alpha L / 2) R(zeta class) + beta c L R(gamma class) + 2 eps W d^{1/q} / sqrt(n)
///   + sqrt(log(1/delta) / (2n)).
/// `feats` are the featurized samples, `W` the norm radius of the parameter classes.
inline BoundReport theorem1_bound(const Dataset& feats, double empirical_risk, const BoundConfig& cfg, double W,
                                  std::uint64_t seed) {
  cfg.validate();
  if (feats.empty()) throw Error("theorem1_bound: empty sample");
  if (!(W >= 0.0) || !std::isfinite(W)) throw ConfigError("bound.W", "must be >= 0");
  if (!(empirical_risk >= 0.0)) throw Error("theorem1_bound: empirical risk must be >= 0");
  BoundReport r;
  r.empirical_risk = empirical_risk;
  r.W = W;
  r.q = cfg.q();
  r.n = feats.size();
  r.d = feats.d;
  std::vector<Vector> xs, yxs;
  xs.reserve(r.n);
  yxs.reserve(r.n);
  for (const auto& s : feats.samples) {
    xs.push_back(s.x);
    Vector v = s.x;
    for (auto& c : v) c *= s.y;
    yxs.push_back(std::move(v));
  }
  const double L = kLipschitz;
  r.rad_zeta = 0.5 * cfg.params.alpha * L * rademacher_linear_mc(yxs, W, r.q, cfg.mc_draws, seed);
  r.rad_gamma = cfg.params.beta * cfg.params.c * L * rademacher_linear_mc(xs, W, r.q, cfg.mc_draws, seed);
  r.eps_term = 2.0 * eps_slack(cfg.eps, W, r.d, r.q, r.n);
  r.conf_term = confidence_term(cfg.delta, r.n);
  r.total = r.empirical_risk + r.rad_zeta + r.rad_gamma + r.eps_term + r.conf_term;
  return r;
}

/// Bound for a trained model on its training sample; W defaults to default_norm_bound.
inline BoundReport theorem1_bound(const RejectionModel& m, const Dataset& ds, const BoundConfig& cfg,
                                  std::uint64_t seed) {
  cfg.validate();
  const double W = cfg.W ? *cfg.W : default_norm_bound(m, cfg.p);
  const double emp = clipped_empirical_risk(m, ds, cfg.eps, cfg.params);
  return theorem1_bound(featurize(m, ds), emp, cfg, W, seed);
}

}  // namespace atro
