// Independent oracles shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "atro/atro.hpp"

namespace atro::testing {

/// Maximum of loss_mh over the l_inf box around z: every corner plus a 21-point grid per axis.
inline double brute_force_mh(const RejectionModel& m, const Vector& z, Label y, double eps,
                             const SurrogateParams& p) {
  const std::size_t d = z.size();
  double best = 0.0;
  Vector zp(d);
  auto eval = [&] {
    const Scores s = m.scores_features(zp);
    best = std::max(best, loss_mh(s.f, s.r, y, p));
  };
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (std::size_t i = 0; i < d; ++i) zp[i] = z[i] + ((mask >> i) & 1 ? eps : -eps);
    eval();
  }
  std::vector<int> idx(d, 0);
  while (true) {
    for (std::size_t i = 0; i < d; ++i) zp[i] = z[i] + eps * (idx[i] - 10) / 10.0;
    eval();
    std::size_t k = 0;
    while (k < d && ++idx[k] == 21) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true derivative is exactly zero
/// from dividing finite-difference roundoff by zero.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of `f` at `x` along every coordinate.
inline Vector central_difference(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-5) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double up = f(x);
    x[i] = xi - h;
    const double down = f(x);
    x[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// One random gradient-check instance: a small tanh net, an input, a label and surrogate weights.
struct GradDraw {
  ToyNet net;
  Vector x;
  Label y = 1;
  NeuralTrainConfig cfg;
};

/// Draws instances whose maximum-hinge branches are separated by at least `gap` (near ties and the hinge
/// floor make the loss non-differentiable within a finite-difference step).
inline GradDraw draw_grad_instance(Rng& rng, std::uint64_t seed, double gap = 1e-3) {
  while (true) {
    GradDraw g;
    const std::size_t d = 1 + rng() % 4;
    std::vector<std::size_t> hidden;
    for (std::size_t k = rng() % 3; k > 0; --k) hidden.push_back(2 + rng() % 5);
    g.net = ToyNet::init(d, hidden, Activation::tanh, seed + rng());
    for (auto& l : g.net.layers)
      for (auto& v : l.b) v = 0.5 * standard_normal(rng);
    g.x.resize(d);
    for (auto& v : g.x) v = standard_normal(rng);
    g.y = rademacher(rng) > 0 ? 1 : -1;
    g.cfg.params = {uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0), uniform(rng, 0.05, 0.45)};
    g.cfg.lambda_w = uniform(rng, 0.0, 0.1);
    const Scores s = forward(g.net, g.x);
    const double a = mh_classify_term(s.f, s.r, g.y, g.cfg.params);
    const double b = mh_reject_term(s.r, g.cfg.params);
    if (std::abs(a - b) > gap && std::max(a, b) > gap) return g;
  }
}

struct GradCheck {
  double worst_param = 0.0;
  double worst_input = 0.0;
};

inline GradCheck check_gradients(const GradDraw& g) {
  GradCheck out;
  const auto gp = grad_params(g.net, g.x, g.y, g.cfg);
  const auto fp = central_difference(
      [&](const Vector& p) {
        ToyNet n = g.net;
        n.set_flat(p);
        return net_loss(n, g.x, g.y, g.cfg);
      },
      g.net.flat());
  for (std::size_t i = 0; i < gp.size(); ++i) out.worst_param = std::max(out.worst_param, rel_error(gp[i], fp[i]));
  const auto gi = grad_input(g.net, g.x, g.y, g.cfg);
  const auto fi = central_difference([&](const Vector& x) { return net_loss(g.net, x, g.y, g.cfg); }, g.x);
  for (std::size_t i = 0; i < gi.size(); ++i) out.worst_input = std::max(out.worst_input, rel_error(gi[i], fi[i]));
  return out;
}

}  // namespace atro::testing
