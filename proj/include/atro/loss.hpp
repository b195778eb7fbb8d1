#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "atro/error.hpp"
#include "atro/linalg.hpp"
#include "atro/model.hpp"

namespace atro {

/// Weights of the rejection surrogate. alpha scales the classification branch, beta the
/// rejection branch, c is the rejection cost. The hinge choice fixes the Lipschitz constant to 1.
struct SurrogateParams {
  double alpha = 1.0;
  double beta = 1.0;
  double c = 0.3;

  void validate(const std::string& prefix = "") const {
    auto path = [&](const char* f) { return prefix.empty() ? std::string(f) : prefix + "." + f; };
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError(path("alpha"), "must be > 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError(path("beta"), "must be > 0");
    if (!(c > 0.0 && c < 0.5)) throw ConfigError(path("c"), "must lie in (0, 0.5)");
  }

  bool operator==(const SurrogateParams&) const = default;
};

inline constexpr double kLipschitz = 1.0;

/// Rejection-aware 0-1 loss with the indicators taken verbatim:
/// 1{y f <= 0} 1{r >= 0} + c 1{r <= 0}. Both fire at r = 0 with y f <= 0.
inline double loss_01c(double f_val, double r_val, Label y, double c) {
  if (!(c > 0.0 && c < 0.5)) throw ConfigError("c", "must lie in (0, 0.5)");
  double loss = 0.0;
  if (y * f_val <= 0.0 && r_val >= 0.0) loss += 1.0;
  if (r_val <= 0.0) loss += c;
  return loss;
}

inline double loss_01c(Scores s, Label y, double c) { return loss_01c(s.f, s.r, y, c); }

/// Which piece of the maximum-hinge loss is active.
enum class MhBranch { classify, reject, inactive };

/// Evaluates max(a, b, 0) and reports the active piece. Ties go to the classification piece;
/// a maximum of exactly 0 counts as inactive so kinks take the zero subgradient.
inline MhBranch mh_branch(double a, double b) {
  if (std::max(a, b) <= 0.0) return MhBranch::inactive;
  return a >= b ? MhBranch::classify : MhBranch::reject;
}

inline double mh_classify_term(double f_val, double r_val, Label y, const SurrogateParams& p) {
  return 1.0 + 0.5 * p.alpha * (r_val - y * f_val);
}

inline double mh_reject_term(double r_val, const SurrogateParams& p) { return p.c * (1.0 - p.beta * r_val); }

/// Maximum hinge loss max(1 + (alpha/2)(r - y f), c (1 - beta r), 0).
inline double loss_mh(double f_val, double r_val, Label y, const SurrogateParams& p) {
  return std::max({mh_classify_term(f_val, r_val, y, p), mh_reject_term(r_val, p), 0.0});
}

inline double loss_mh(Scores s, Label y, const SurrogateParams& p) { return loss_mh(s.f, s.r, y, p); }

/// Catalog of monotone convex upper bounds of the step function, written as v -> Phi(v).
enum class StepBound { hinge, squared_hinge };

inline double step_bound(StepBound kind, double v) {
  const double h = std::max(1.0 + v, 0.0);
  return kind == StepBound::hinge ? h : h * h;
}

/// Generic convex surrogate Phi((alpha/2)(r - y f)) + c Psi(-beta r).
inline double surrogate_conv(double f_val, double r_val, Label y, const SurrogateParams& p,
                             StepBound phi = StepBound::hinge, StepBound psi = StepBound::hinge) {
  return step_bound(phi, 0.5 * p.alpha * (r_val - y * f_val)) + p.c * step_bound(psi, -p.beta * r_val);
}

/// The two worst-case pieces of the maximum-hinge loss over an l_inf ball.
struct AdvTerms {
  double a_tilde = 0.0;  // classification piece at its worst point
  double b_tilde = 0.0;  // rejection piece at its worst point
};

/// Closed-form worst case over the l_inf ball of radius eps, for a model linear in the features `z`:
///   max y<z', zeta(y)> = y<z, zeta(y)> + eps ||zeta(y)||_1
///   max -beta r(z')    = -beta (<z, theta> - eps ||theta||_1)
/// Bias terms ride along unperturbed and are excluded from the l1 norms.
inline AdvTerms adv_terms_linear(const RejectionModel& m, std::span<const double> z, Label y, double eps,
                                 const SurrogateParams& p) {
  if (!(eps >= 0.0)) throw ConfigError("eps", "must be >= 0");
  if (y != 1 && y != -1) throw Error("label must be -1 or +1");
  if (z.size() != m.feature_dim()) throw DimensionError("adv_terms_linear: feature dimension mismatch");
  double zeta_l1 = 0.0;
  double theta_l1 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    zeta_l1 += std::abs(m.theta[i] / y - m.gamma[i]);
    theta_l1 += std::abs(m.theta[i]);
  }
  // r - y f equals y <z, zeta(y)> + y zeta_bias(y); evaluating it through the scores keeps eps = 0
  // bit-identical to loss_mh
  const Scores s = m.scores_features(z);
  AdvTerms t;
  t.a_tilde = 1.0 + 0.5 * p.alpha * ((s.r - y * s.f) + eps * zeta_l1);
  t.b_tilde = p.c * (1.0 - p.beta * (s.r - eps * theta_l1));
  return t;
}

inline double adv_loss_mh(const AdvTerms& t) { return std::max({t.a_tilde, t.b_tilde, 0.0}); }

/// Worst-case maximum-hinge loss over the l_inf ball for a linear model.
inline double adv_loss_mh_linear(const RejectionModel& m, std::span<const double> z, Label y, double eps,
                                 const SurrogateParams& p) {
  return adv_loss_mh(adv_terms_linear(m, z, y, eps, p));
}

/// Plain hinge max(0, 1 - y f) for the no-rejection baselines.
inline double loss_hinge(double f_val, Label y) { return std::max(0.0, 1.0 - y * f_val); }

/// Worst-case hinge over the l_inf ball: max(0, 1 - y f + eps ||gamma||_1).
inline double adv_loss_hinge_linear(const RejectionModel& m, std::span<const double> z, Label y, double eps) {
  if (!(eps >= 0.0)) throw ConfigError("eps", "must be >= 0");
  const double f = m.scores_features(z).f;
  return std::max(0.0, 1.0 - y * f + eps * norm1(m.gamma));
}

/// Clipped adversarial hinge surrogate min(L_conv, 1), the loss class the generalization bound covers.
inline double clipped_adv_surrogate(const RejectionModel& m, std::span<const double> z, Label y, double eps,
                                    const SurrogateParams& p) {
  const auto t = adv_terms_linear(m, z, y, eps, p);
  // t.a_tilde = 1 + u and t.b_tilde = c (1 + v) for the hinge arguments u, v
  const double phi = std::max(t.a_tilde, 0.0);
  const double psi = std::max(t.b_tilde / p.c, 0.0);
  return std::min(phi + p.c * psi, 1.0);
}

}  // namespace atro
