#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atro/error.hpp"
#include "atro/linalg.hpp"
#include "atro/loss.hpp"
#include "atro/model.hpp"
#include "atro/rng.hpp"

namespace atro {

enum class AttackMethod { none, analytic_linear, fgsm, pgd };
enum class NormKind { linf, l2 };

inline const char* to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::none: return "none";
    case AttackMethod::analytic_linear: return "analytic_linear";
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::pgd: return "pgd";
  }
  return "?";
}

inline AttackMethod parse_attack_method(std::string_view s) {
  if (s == "none") return AttackMethod::none;
  if (s == "analytic_linear" || s == "analytic") return AttackMethod::analytic_linear;
  if (s == "fgsm") return AttackMethod::fgsm;
  if (s == "pgd") return AttackMethod::pgd;
  throw ConfigError("attack.method", "unknown attack '" + std::string(s) + "'");
}

inline const char* to_string(NormKind n) { return n == NormKind::linf ? "linf" : "l2"; }

inline NormKind parse_norm_kind(std::string_view s) {
  if (s == "linf") return NormKind::linf;
  if (s == "l2") return NormKind::l2;
  throw ConfigError("attack.norm", "unknown norm '" + std::string(s) + "'");
}

struct AttackSpec {
  AttackMethod method = AttackMethod::pgd;
  double eps = 0.0;
  NormKind norm = NormKind::linf;
  int steps = 20;
  std::optional<double> step_size;  // nullopt means eps / sqrt(steps)
  bool random_start = false;
  std::uint64_t seed = 0;

  double resolved_step_size() const {
    return step_size ? *step_size : eps / std::sqrt(static_cast<double>(std::max(steps, 1)));
  }

  void validate(const std::string& prefix = "attack") const {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError(prefix + ".eps", "must be >= 0");
    if (steps < 1) throw ConfigError(prefix + ".steps", "must be a positive integer");
    if (step_size && !(*step_size >= 0.0)) throw ConfigError(prefix + ".step_size", "must be >= 0");
    if ((method == AttackMethod::analytic_linear || method == AttackMethod::fgsm) && norm != NormKind::linf)
      throw ConfigError(prefix + ".norm", std::string("must be linf for ") + to_string(method));
  }

  bool operator==(const AttackSpec&) const = default;
};

inline AttackSpec attack_spec(AttackMethod method, double eps = 0.0) {
  AttackSpec a;
  a.method = method;
  a.eps = eps;
  return a;
}

struct Perturbation {
  Vector delta;
  double achieved_loss = 0.0;
};

/// Loss value and its gradient with respect to the input, as returned by a gradient oracle.
struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

template <class Oracle>
concept GradientOracle = requires(const Oracle& o, std::span<const double> x, Label y) {
  { o(x, y) } -> std::convertible_to<LossGrad>;
};

namespace detail {

inline void project(std::span<double> delta, double eps, NormKind norm) {
  if (norm == NormKind::linf) {
    for (auto& v : delta) v = std::clamp(v, -eps, eps);
    return;
  }
  const double n = norm2(delta);
  if (n > eps) {
    const double s = eps / n;
    for (auto& v : delta) v *= s;
  }
}

inline void require_finite_grad(const LossGrad& lg, int step) {
  if (!std::isfinite(lg.loss) || !all_finite(lg.grad))
    throw NumericError("attack: non-finite loss or gradient at step " + std::to_string(step));
}

}  // namespace detail

/// Single-step attack delta = eps * sgn(grad), sgn(0) = 0.
template <GradientOracle Oracle>
Perturbation fgsm(const Oracle& oracle, std::span<const double> x, Label y, double eps) {
  if (!(eps >= 0.0)) throw ConfigError("attack.eps", "must be >= 0");
  const LossGrad g = oracle(x, y);
  detail::require_finite_grad(g, 0);
  if (g.grad.size() != x.size()) throw DimensionError("fgsm: gradient dimension mismatch");
  Perturbation p{Vector(x.size()), 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) p.delta[i] = eps * sgn(g.grad[i]);
  p.achieved_loss = oracle(add(x, p.delta), y).loss;
  return p;
}

/// Projected gradient ascent on the oracle's loss. linf uses sign steps and box projection, l2 uses
/// normalized-gradient steps and ball projection. Returns the best iterate, the start included.
template <GradientOracle Oracle>
Perturbation pgd(const Oracle& oracle, std::span<const double> x, Label y, const AttackSpec& spec) {
  spec.validate();
  const std::size_t d = x.size();
  const double eps = spec.eps;
  const double step = spec.resolved_step_size();

  Vector delta(d, 0.0);
  if (spec.random_start && eps > 0.0) {
    Rng rng(spec.seed);
    if (spec.norm == NormKind::linf) {
      for (auto& v : delta) v = uniform(rng, -eps, eps);
    } else {
      for (auto& v : delta) v = standard_normal(rng);
      const double n = norm2(delta);
      const double radius = eps * std::pow(uniform01(rng), 1.0 / static_cast<double>(std::max<std::size_t>(d, 1)));
      for (auto& v : delta) v = n > 0.0 ? v * radius / n : 0.0;
    }
  }

  Vector point(d);
  auto at = [&](std::span<const double> dl) -> std::span<const double> {
    for (std::size_t i = 0; i < d; ++i) point[i] = x[i] + dl[i];
    return point;
  };

  LossGrad cur = oracle(at(delta), y);
  detail::require_finite_grad(cur, 0);
  Perturbation best{delta, cur.loss};

  for (int n = 1; n <= spec.steps; ++n) {
    if (cur.grad.size() != d) throw DimensionError("pgd: gradient dimension mismatch");
    if (spec.norm == NormKind::linf) {
      for (std::size_t i = 0; i < d; ++i) delta[i] += step * sgn(cur.grad[i]);
    } else {
      const double gn = norm2(cur.grad);
      if (gn > 0.0)
        for (std::size_t i = 0; i < d; ++i) delta[i] += step * cur.grad[i] / gn;
    }
    detail::project(delta, eps, spec.norm);
    cur = oracle(at(delta), y);
    detail::require_finite_grad(cur, n);
    if (cur.loss > best.achieved_loss) best = {delta, cur.loss};
  }
  return best;
}

/// Gradient oracle of the maximum-hinge loss of a linear model, in feature space.
/// Uses the declared tie rule (classification piece first, zero at kinks).
struct LinearMhOracle {
  const RejectionModel* model;
  SurrogateParams params;

  LossGrad operator()(std::span<const double> z, Label y) const {
    const Scores s = model->scores_features(z);
    const double a = mh_classify_term(s.f, s.r, y, params);
    const double b = mh_reject_term(s.r, params);
    LossGrad out{std::max({a, b, 0.0}), Vector(z.size(), 0.0)};
    switch (mh_branch(a, b)) {
      case MhBranch::classify:
        for (std::size_t i = 0; i < z.size(); ++i)
          out.grad[i] = 0.5 * params.alpha * (model->theta[i] - y * model->gamma[i]);
        break;
      case MhBranch::reject:
        for (std::size_t i = 0; i < z.size(); ++i) out.grad[i] = -params.c * params.beta * model->theta[i];
        break;
      case MhBranch::inactive: break;
    }
    return out;
  }
};

/// Exact maximizers of the two linear pieces over the l_inf ball:
/// delta_A = y eps sgn(zeta(y)) raises r - y f, delta_B = -eps sgn(theta) lowers r.
/// Each achieved_loss is the 0-1-c loss at the perturbed point.
inline std::array<Perturbation, 2> analytic_candidates(const RejectionModel& m, std::span<const double> z, Label y,
                                                       double eps, double c) {
  if (!(eps >= 0.0)) throw ConfigError("attack.eps", "must be >= 0");
  if (z.size() != m.feature_dim()) throw DimensionError("analytic_candidates: feature dimension mismatch");
  const Vector zt = zeta(m, y);
  std::array<Perturbation, 2> out{Perturbation{Vector(z.size()), 0.0}, Perturbation{Vector(z.size()), 0.0}};
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[0].delta[i] = y * eps * sgn(zt[i]);
    out[1].delta[i] = -eps * sgn(m.theta[i]);
  }
  for (auto& p : out) p.achieved_loss = loss_01c(m.scores_features(add(z, p.delta)), y, c);
  return out;
}

enum class WorstCaseMode { heuristic, exact_small_d };

/// Index into the heuristic candidate set {clean, delta_A, delta_B, delta_PGD}.
enum class Candidate : int { clean = 0, analytic_classify = 1, analytic_reject = 2, pgd = 3, grid = 4 };

inline const char* to_string(Candidate c) {
  switch (c) {
    case Candidate::clean: return "clean";
    case Candidate::analytic_classify: return "analytic_classify";
    case Candidate::analytic_reject: return "analytic_reject";
    case Candidate::pgd: return "pgd";
    case Candidate::grid: return "grid";
  }
  return "?";
}

struct WorstCase {
  double loss = 0.0;
  Candidate winner = Candidate::clean;
  Vector delta;
};

inline constexpr std::size_t kExactMaxDim = 6;
inline constexpr int kExactGridPoints = 21;

/// Evaluation-time attack on the pair (f, r) for the 0-1-c loss over the l_inf ball.
/// heuristic: max over {clean, delta_A, delta_B, PGD on the maximum-hinge loss}; ties keep the earlier candidate.
/// exact_small_d: max over a 21-point-per-axis grid and all corners (test oracle, d <= 6).
inline WorstCase worst_case_01c(const RejectionModel& m, std::span<const double> z, Label y, double eps, double c,
                                WorstCaseMode mode = WorstCaseMode::heuristic,
                                const SurrogateParams& params = {}, int pgd_steps = 20) {
  if (!(eps >= 0.0)) throw ConfigError("attack.eps", "must be >= 0");
  const std::size_t d = z.size();
  WorstCase best{loss_01c(m.scores_features(z), y, c), Candidate::clean, Vector(d, 0.0)};
  auto consider = [&](const Vector& delta, Candidate who) {
    const double l = loss_01c(m.scores_features(add(z, delta)), y, c);
    if (l > best.loss) best = {l, who, delta};
  };

  if (mode == WorstCaseMode::heuristic) {
    auto cands = analytic_candidates(m, z, y, eps, c);
    consider(cands[0].delta, Candidate::analytic_classify);
    consider(cands[1].delta, Candidate::analytic_reject);
    AttackSpec spec;
    spec.method = AttackMethod::pgd;
    spec.eps = eps;
    spec.steps = pgd_steps;
    SurrogateParams sp = params;
    sp.c = c;
    const auto p = pgd(LinearMhOracle{&m, sp}, z, y, spec);
    consider(p.delta, Candidate::pgd);
    return best;
  }

  if (d > kExactMaxDim) throw Error("worst_case_01c: exact mode supports d <= 6");
  // corners first, then the full grid
  Vector delta(d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (std::size_t i = 0; i < d; ++i) delta[i] = (mask >> i) & 1 ? eps : -eps;
    consider(delta, Candidate::grid);
  }
  std::vector<int> idx(d, 0);
  constexpr int half = (kExactGridPoints - 1) / 2;
  while (true) {
    // symmetric so the centre is exactly 0 and the ends exactly +-eps
    for (std::size_t i = 0; i < d; ++i) delta[i] = eps * (idx[i] - half) / half;
    consider(delta, Candidate::grid);
    std::size_t k = 0;
    while (k < d && ++idx[k] == kExactGridPoints) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

}  // namespace atro
