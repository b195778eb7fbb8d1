#include <gtest/gtest.h>

#include <cmath>

#include "atro/attack.hpp"

using namespace atro;

namespace {

SurrogateParams unit(double c = 0.3) { return {1.0, 1.0, c}; }

// Hinge loss of a linear classifier f(x) = <w, x>, with its input gradient.
struct HingeOracle {
  Vector w;
  LossGrad operator()(std::span<const double> x, Label y) const {
    const double margin = y * dot(w, x);
    LossGrad out{std::max(0.0, 1.0 - margin), Vector(x.size(), 0.0)};
    if (margin < 1.0)
      for (std::size_t i = 0; i < x.size(); ++i) out.grad[i] = -y * w[i];
    return out;
  }
};

struct NanOracle {
  LossGrad operator()(std::span<const double> x, Label) const {
    return {0.0, Vector(x.size(), std::numeric_limits<double>::quiet_NaN())};
  }
};

RejectionModel random_model(Rng& rng, std::size_t d, double scale = 1.0) {
  auto m = RejectionModel::zeros(FeatureMap::identity(d));
  for (auto& v : m.theta) v = scale * standard_normal(rng);
  for (auto& v : m.gamma) v = scale * standard_normal(rng);
  m.bias_theta = scale * standard_normal(rng);
  m.bias_gamma = scale * standard_normal(rng);
  return m;
}

AttackSpec pgd_spec(double eps, int steps = 20, NormKind norm = NormKind::linf) {
  auto s = attack_spec(AttackMethod::pgd, eps);
  s.steps = steps;
  s.norm = norm;
  return s;
}

}  // namespace

TEST(Fgsm, HingeExample) {
  const HingeOracle h{{3, -1}};
  auto p = fgsm(h, Vector{0, 0}, 1, 0.25);
  EXPECT_EQ(p.delta, (Vector{-0.25, 0.25}));
  EXPECT_DOUBLE_EQ(p.achieved_loss, 1.0 + 0.25 * 4);
}

TEST(Fgsm, ZeroRadiusAndZeroGradient) {
  const HingeOracle h{{3, -1}};
  EXPECT_EQ(fgsm(h, Vector{0, 0}, 1, 0.0).delta, (Vector{0, 0}));
  // margin 30 >= 1: hinge inactive, zero gradient
  EXPECT_EQ(fgsm(h, Vector{10, 0}, 1, 0.5).delta, (Vector{0, 0}));
}

TEST(Fgsm, NonFiniteGradientIsAnError) {
  EXPECT_THROW(fgsm(NanOracle{}, Vector{0, 0}, 1, 0.1), NumericError);
  EXPECT_THROW(pgd(NanOracle{}, Vector{0, 0}, 1, pgd_spec(0.1)), NumericError);
}

TEST(Pgd, ZeroRadius) {
  Rng rng(3);
  auto m = random_model(rng, 4);
  Vector z{0.1, 0.2, 0.3, 0.4};
  const LinearMhOracle o{&m, unit()};
  auto p = pgd(o, z, 1, pgd_spec(0.0));
  EXPECT_EQ(p.delta, Vector(4, 0.0));
  EXPECT_EQ(p.achieved_loss, o(z, 1).loss);
}

TEST(Pgd, AutoStepSize) {
  auto s = pgd_spec(0.3, 9);
  EXPECT_DOUBLE_EQ(s.resolved_step_size(), 0.1);
  s.step_size = 0.05;
  EXPECT_DOUBLE_EQ(s.resolved_step_size(), 0.05);
}

TEST(Pgd, FeasibleAndNeverBelowClean) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 1 + k % 6;
    auto m = random_model(rng, d);
    Vector z(d);
    for (auto& v : z) v = standard_normal(rng);
    const Label y = k % 2 ? 1 : -1;
    const LinearMhOracle o{&m, unit()};
    for (auto norm : {NormKind::linf, NormKind::l2}) {
      auto spec = pgd_spec(0.3, 10, norm);
      spec.random_start = k % 3 == 0;
      spec.seed = k;
      auto p = pgd(o, z, y, spec);
      const double n = norm == NormKind::linf ? norm_inf(p.delta) : norm2(p.delta);
      EXPECT_LE(n, 0.3 + 1e-12);
      if (!spec.random_start) {
        EXPECT_GE(p.achieved_loss, o(z, y).loss);
      }
      EXPECT_DOUBLE_EQ(p.achieved_loss, o(add(z, p.delta), y).loss);
    }
  }
}

TEST(Pgd, LinearModelStaysBelowClosedForm) {
  // the closed form is the true maximum, so PGD can only approach it from below
  Rng rng(5);
  int within = 0, total = 0;
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 6;
    auto m = random_model(rng, d);
    Vector z(d);
    for (auto& v : z) v = standard_normal(rng);
    const Label y = k % 2 ? 1 : -1;
    for (double eps : {0.01, 0.1, 1.0}) {
      const double closed = adv_loss_mh_linear(m, z, y, eps, unit());
      const double got = pgd(LinearMhOracle{&m, unit()}, z, y, pgd_spec(eps, 40)).achieved_loss;
      EXPECT_LE(got, closed + 1e-9);
      within += got >= closed - 1e-6;
      ++total;
    }
  }
  // reported, not asserted beyond being the common case
  RecordProperty("pgd_reaches_closed_form", std::to_string(within) + "/" + std::to_string(total));
  EXPECT_GT(within, total / 2);
}

TEST(AnalyticCandidates, WorkedExample) {
  auto m = RejectionModel::zeros(FeatureMap::identity(2));
  m.theta = {1, -1};
  m.gamma = {2, 0};
  const Vector x{1, 1};
  auto c = analytic_candidates(m, x, 1, 0.1, 0.3);
  EXPECT_EQ(c[0].delta, (Vector{-0.1, -0.1}));
  EXPECT_EQ(c[1].delta, (Vector{-0.1, 0.1}));
  // each candidate attains its closed-form piece
  const auto zt = zeta(m, 1);
  EXPECT_NEAR(dot(add(x, c[0].delta), zt), dot(x, zt) + 0.1 * norm1(zt), 1e-15);
  EXPECT_NEAR(m.scores_features(add(x, c[1].delta)).r, dot(x, m.theta) - 0.1 * norm1(m.theta), 1e-15);
  auto zero = analytic_candidates(m, x, 1, 0.0, 0.3);
  EXPECT_EQ(zero[0].delta, Vector(2, 0.0));
  EXPECT_EQ(zero[1].delta, Vector(2, 0.0));
}

TEST(AnalyticCandidates, AttainClosedFormTermsOnRandomModels) {
  Rng rng(6);
  const auto p = unit();
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 6;
    auto m = random_model(rng, d);
    Vector z(d);
    for (auto& v : z) v = standard_normal(rng);
    const Label y = k % 2 ? 1 : -1;
    const double eps = 0.2;
    auto c = analytic_candidates(m, z, y, eps, p.c);
    const auto t = adv_terms_linear(m, z, y, eps, p);
    const Scores sa = m.scores_features(add(z, c[0].delta));
    const Scores sb = m.scores_features(add(z, c[1].delta));
    EXPECT_NEAR(mh_classify_term(sa.f, sa.r, y, p), t.a_tilde, 1e-12);
    EXPECT_NEAR(mh_reject_term(sb.r, p), t.b_tilde, 1e-12);
    EXPECT_LE(norm_inf(c[0].delta), eps + 1e-12);
    EXPECT_LE(norm_inf(c[1].delta), eps + 1e-12);
  }
}

TEST(WorstCase, RejectEverythingGivesCost) {
  auto m = RejectionModel::zeros(FeatureMap::identity(2));
  m.bias_theta = -100.0;
  for (auto mode : {WorstCaseMode::heuristic, WorstCaseMode::exact_small_d})
    EXPECT_DOUBLE_EQ(worst_case_01c(m, Vector{0.2, 0.3}, 1, 0.5, 0.3, mode).loss, 0.3);
}

TEST(WorstCase, LargeMarginsGiveZero) {
  auto m = RejectionModel::zeros(FeatureMap::identity(2));
  m.theta = {1, 1};
  m.gamma = {1, -1};
  m.bias_theta = 5.0;
  m.bias_gamma = 5.0;
  for (auto mode : {WorstCaseMode::heuristic, WorstCaseMode::exact_small_d})
    EXPECT_EQ(worst_case_01c(m, Vector{0.1, 0.1}, 1, 0.5, 0.3, mode).loss, 0.0);
}

TEST(WorstCase, ExactModeLimitsDimension) {
  auto m = RejectionModel::zeros(FeatureMap::identity(7));
  EXPECT_THROW(worst_case_01c(m, Vector(7, 0.0), 1, 0.1, 0.3, WorstCaseMode::exact_small_d), Error);
}

TEST(WorstCase, HeuristicDominatesCleanAndIsBoundedByExact) {
  Rng rng(7);
  int equal = 0, total = 0;
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 4;
    auto m = random_model(rng, d);
    Vector z(d);
    for (auto& v : z) v = 0.5 * standard_normal(rng);
    const Label y = k % 2 ? 1 : -1;
    const double eps = k % 3 == 0 ? 0.05 : 0.5;
    const double clean = loss_01c(m.scores_features(z), y, 0.3);
    const auto h = worst_case_01c(m, z, y, eps, 0.3, WorstCaseMode::heuristic, unit());
    const auto e = worst_case_01c(m, z, y, eps, 0.3, WorstCaseMode::exact_small_d, unit());
    EXPECT_GE(h.loss, clean);
    EXPECT_LE(norm_inf(h.delta), eps + 1e-12);
    EXPECT_DOUBLE_EQ(h.loss, loss_01c(m.scores_features(add(z, h.delta)), y, 0.3));
    EXPECT_LE(h.loss, e.loss);
    equal += h.loss == e.loss;
    ++total;
  }
  RecordProperty("heuristic_equals_exact", std::to_string(equal) + "/" + std::to_string(total));
}

TEST(AttackSpec, Validation) {
  auto s = attack_spec(AttackMethod::fgsm, 0.1);
  s.norm = NormKind::l2;
  EXPECT_THROW(s.validate(), ConfigError);
  s = attack_spec(AttackMethod::analytic_linear, 0.1);
  s.norm = NormKind::l2;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(attack_spec(AttackMethod::pgd, -0.1).validate(), ConfigError);
  s = attack_spec(AttackMethod::pgd, 0.1);
  s.steps = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(parse_attack_method("analytic_linear"), AttackMethod::analytic_linear);
  EXPECT_THROW(parse_attack_method("cw"), ConfigError);
}
