#include <gtest/gtest.h>

#include <cmath>

#include "atro/bounds.hpp"
#include "atro/datagen.hpp"
#include "atro/solver.hpp"

using namespace atro;

namespace {

std::vector<Vector> random_points(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Vector> xs(n, Vector(d));
  for (auto& x : xs)
    for (auto& v : x) v = uniform(rng, -1.0, 1.0);
  return xs;
}

// Independent oracle for the standard class: W ||sum sigma_i x_i||_q averaged over all sign vectors.
double standard_by_dual_norm(const std::vector<Vector>& xs, double W, double q) {
  const std::size_t n = xs.size(), d = xs[0].size();
  double acc = 0.0;
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    Vector s(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) s[j] += ((mask >> i) & 1 ? 1.0 : -1.0) * xs[i][j];
    acc += W * norm_p(s, q);
  }
  return acc / static_cast<double>(1ull << n) / static_cast<double>(n);
}

}  // namespace

TEST(RademacherMc, SinglePoint) {
  // both signs give ||x||_2 = 2
  EXPECT_DOUBLE_EQ(rademacher_linear_mc({{2.0, 0.0}}, 1.0, 2.0, 50, 1), 2.0);
  EXPECT_DOUBLE_EQ(rademacher_linear_mc({{1.2, -1.6}}, 1.0, 2.0, 7, 3), 2.0);
}

TEST(RademacherMc, TwoEqualPoints) {
  const std::vector<Vector> xs{{1.0, 0.0}, {1.0, 0.0}};
  EXPECT_DOUBLE_EQ(rademacher_exhaustive(xs, RadClass::standard_linear, 1.0, 2.0, 0.0), 0.5);
  EXPECT_NEAR(rademacher_linear_mc(xs, 1.0, 2.0, 20000, 4), 0.5, 0.02);
}

TEST(RademacherMc, HomogeneousInW) {
  Rng rng(2);
  auto xs = random_points(rng, 9, 3);
  EXPECT_EQ(rademacher_linear_mc(xs, 2.0, 2.0, 100, 8), 2.0 * rademacher_linear_mc(xs, 1.0, 2.0, 100, 8));
}

TEST(RademacherMc, ConvergesToExhaustive) {
  Rng rng(3);
  auto xs = random_points(rng, 8, 2);
  const double exact = rademacher_exhaustive(xs, RadClass::standard_linear, 1.0, 2.0, 0.0);
  double prev_gap = 1e9;
  for (int draws : {100, 10000}) {
    const double gap = std::abs(rademacher_linear_mc(xs, 1.0, 2.0, draws, 5) - exact);
    RecordProperty("mc_gap_" + std::to_string(draws), std::to_string(gap));
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.02);
}

TEST(RademacherExhaustive, StandardMatchesDualNorm) {
  Rng rng(4);
  for (double q : {1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()}) {
    auto xs = random_points(rng, 6, 3);
    EXPECT_NEAR(rademacher_exhaustive(xs, RadClass::standard_linear, 1.5, q, 0.0), standard_by_dual_norm(xs, 1.5, q),
                1e-12);
  }
}

TEST(RademacherExhaustive, ZeroRadiusReduces) {
  Rng rng(5);
  auto xs = random_points(rng, 7, 2);
  EXPECT_EQ(rademacher_exhaustive(xs, RadClass::adversarial_linear, 1.0, 2.0, 0.0),
            rademacher_exhaustive(xs, RadClass::standard_linear, 1.0, 2.0, 0.0));
}

TEST(RademacherExhaustive, OrthantFormAgreesWithGrid) {
  Rng rng(6);
  for (int k = 0; k < 6; ++k) {
    const std::size_t d = 1 + k % 2;
    auto xs = random_points(rng, 5, d);
    const double q = k % 3 == 0 ? 2.0 : (k % 3 == 1 ? 1.0 : std::numeric_limits<double>::infinity());
    const double eps = 0.2;
    const double orth = rademacher_exhaustive(xs, RadClass::adversarial_linear, 1.0, q, eps);
    const double grid = rademacher_exhaustive(xs, RadClass::adversarial_linear, 1.0, q, eps, SupMethod::grid, 401);
    EXPECT_GE(orth, grid - 1e-12);  // the grid is a subset of the ball
    EXPECT_NEAR(orth, grid, 1e-3);
  }
}

TEST(RademacherExhaustive, SandwichOnRandomInstances) {
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng() % 12, d = 1 + rng() % 3;
    auto xs = random_points(rng, n, d);
    const double W = uniform(rng, 0.1, 3.0), eps = uniform(rng, 0.0, 0.5);
    const double p = std::array{1.0, 1.5, 2.0, 4.0}[k % 4];
    const double q = dual_exponent(p);
    const double std_r = rademacher_exhaustive(xs, RadClass::standard_linear, W, q, 0.0);
    const double adv_r = rademacher_exhaustive(xs, RadClass::adversarial_linear, W, q, eps);
    EXPECT_LE(std_r, adv_r + 1e-12);
    EXPECT_LE(adv_r, std_r + eps_slack(eps, W, d, q, n) + 1e-12);
  }
}

TEST(RademacherExhaustive, SizeLimits) {
  EXPECT_THROW(rademacher_exhaustive(std::vector<Vector>(13, Vector{1.0}), RadClass::standard_linear, 1, 2, 0), Error);
  EXPECT_THROW(rademacher_exhaustive(std::vector<Vector>(2, Vector(4, 1.0)), RadClass::standard_linear, 1, 2, 0),
               Error);
}

TEST(Bound, ConfidenceTerm) {
  EXPECT_NEAR(confidence_term(0.01, 50), 0.2146, 5e-5);
  EXPECT_DOUBLE_EQ(confidence_term(0.01, 50), std::sqrt(std::log(100.0) / 100.0));
}

TEST(Bound, ZeroRadiusHasNoSlack) {
  auto ds = gaussian_clusters(50, 2, 2.0, 1.0, 1);
  BoundConfig cfg;
  cfg.eps = 0.0;
  EXPECT_EQ(theorem1_bound(ds, 0.1, cfg, 1.0, 3).eps_term, 0.0);
}

TEST(Bound, TermsNonNegativeAndMonotone) {
  Rng rng(8);
  for (int k = 0; k < 30; ++k) {
    auto ds = gaussian_clusters(20 + k, 3, 1.0, 1.0, k);
    BoundConfig cfg;
    cfg.p = std::array{1.0, 2.0, std::numeric_limits<double>::infinity()}[k % 3];
    cfg.mc_draws = 200;
    cfg.eps = uniform(rng, 0.0, 0.2);
    const double W = uniform(rng, 0.5, 2.0), emp = uniform(rng, 0.0, 1.0);
    const auto r = theorem1_bound(ds, emp, cfg, W, 11);
    for (double t : {r.rad_zeta, r.rad_gamma, r.eps_term, r.conf_term}) EXPECT_GE(t, 0.0);
    EXPECT_GE(r.total, r.empirical_risk);
    EXPECT_NEAR(r.total, r.empirical_risk + r.rad_zeta + r.rad_gamma + r.eps_term + r.conf_term, 1e-12);
    auto more_eps = cfg;
    more_eps.eps += 0.1;
    EXPECT_GE(theorem1_bound(ds, emp, more_eps, W, 11).total, r.total);
    EXPECT_GE(theorem1_bound(ds, emp, cfg, 2 * W, 11).total, r.total);
  }
}

TEST(Bound, RademacherTermsUseSurrogateWeights) {
  auto ds = gaussian_clusters(40, 2, 1.0, 1.0, 2);
  BoundConfig cfg;
  cfg.params = {2.0, 3.0, 0.25};
  cfg.mc_draws = 300;
  const auto r = theorem1_bound(ds, 0.0, cfg, 1.0, 9);
  std::vector<Vector> xs, yxs;
  for (const auto& s : ds.samples) {
    xs.push_back(s.x);
    yxs.push_back({s.y * s.x[0], s.y * s.x[1]});
  }
  EXPECT_DOUBLE_EQ(r.rad_zeta, 0.5 * 2.0 * rademacher_linear_mc(yxs, 1.0, 2.0, 300, 9));
  EXPECT_DOUBLE_EQ(r.rad_gamma, 3.0 * 0.25 * rademacher_linear_mc(xs, 1.0, 2.0, 300, 9));
}

TEST(Bound, TrainedModelBoundCoversClippedRisk) {
  auto ds = gaussian_clusters(60, 2, 2.0, 1.0, 3);
  TrainConfig tc;
  tc.epochs = 200;
  tc.eps = 0.05;
  auto m = train(ds, tc).first;
  BoundConfig cfg;
  cfg.eps = 0.05;
  cfg.params = tc.params;
  const auto r = theorem1_bound(m, ds, cfg, 4);
  EXPECT_DOUBLE_EQ(r.W, default_norm_bound(m, 2.0));
  EXPECT_DOUBLE_EQ(r.empirical_risk, clipped_empirical_risk(m, ds, 0.05, tc.params));
  EXPECT_LE(r.empirical_risk, 1.0);
  EXPECT_GE(r.total, r.empirical_risk);
}

TEST(BoundConfig, Validation) {
  BoundConfig cfg;
  cfg.p = 1.0;
  EXPECT_TRUE(std::isinf(cfg.q()));
  cfg.p = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.p = 2.0;
  cfg.delta = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.delta = 0.05;
  cfg.W = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
