#include <gtest/gtest.h>

#include "atro/datagen.hpp"
#include "atro/eval.hpp"
#include "atro/solver.hpp"

using namespace atro;

namespace {

TrainConfig config(TrainMode mode, double c = 0.3, double eps = 0.0, int epochs = 300) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.params.c = c;
  cfg.eps = eps;
  cfg.epochs = epochs;
  cfg.eta0 = 1.0;
  cfg.seed = 3;
  return cfg;
}

double rejection_rate(const RejectionModel& m, const Dataset& ds) {
  return evaluate(m, ds, attack_spec(AttackMethod::none)).metrics.rej;
}

}  // namespace

TEST(Objective, ZeroModelCostsOnePerSample) {
  auto ds = gaussian_clusters(30, 2, 2.0, 1.0, 1);
  auto m = RejectionModel::zeros(FeatureMap::identity(2));
  EXPECT_DOUBLE_EQ(objective(m, ds, config(TrainMode::atro)), 30.0);
}

TEST(Objective, BothBranchesInactive) {
  Dataset ds{{{{0.0}, 1}}, 1, ""};
  auto m = RejectionModel::zeros(FeatureMap::identity(1));
  m.bias_gamma = 10.0;  // f = 10
  m.bias_theta = 2.0;   // r = 2
  auto cfg = config(TrainMode::atro);
  cfg.lambda = cfg.lambda_prime = 0.0;
  EXPECT_EQ(objective(m, ds, cfg), 0.0);
}

TEST(Objective, RegularizerIsLinearInLambda) {
  auto ds = gaussian_clusters(20, 3, 2.0, 1.0, 2);
  auto m = RejectionModel::zeros(FeatureMap::identity(3));
  m.theta = {0.5, -1.0, 2.0};
  m.gamma = {0.1, 0.2, -0.3};
  auto cfg = config(TrainMode::atro);
  cfg.lambda = 0.25;
  const double base = objective(m, ds, cfg);
  cfg.lambda = 0.5;
  EXPECT_NEAR(objective(m, ds, cfg) - base, 0.25 / 2.0 * (0.25 + 1.0 + 4.0), 1e-12);
}

TEST(Objective, BaselinesUseHinge) {
  auto ds = gaussian_clusters(20, 2, 2.0, 1.0, 2);
  auto m = RejectionModel::zeros(FeatureMap::identity(2));
  m.gamma = {1.5, -0.5};
  m.bias_gamma = 0.1;
  m.disable_rejection();
  auto cfg = config(TrainMode::at, 0.3, 0.1);
  cfg.lambda_prime = 0.0;
  double expect = 0.0;
  for (const auto& s : ds.samples) expect += adv_loss_hinge_linear(m, s.x, s.y, 0.1);
  EXPECT_NEAR(objective(m, ds, cfg), expect, 1e-12);
}

TEST(TrainConfig, ModeInvariants) {
  EXPECT_THROW(config(TrainMode::svm, 0.3, 0.1).validate(), ConfigError);
  EXPECT_THROW(config(TrainMode::mh, 0.3, 0.1).validate(), ConfigError);
  EXPECT_NO_THROW(config(TrainMode::at, 0.3, 0.1).validate());
  EXPECT_NO_THROW(config(TrainMode::atro, 0.3, 0.1).validate());
  EXPECT_THROW(config(TrainMode::atro, 0.3, -0.1).validate(), ConfigError);
  EXPECT_THROW(parse_train_mode("svr"), ConfigError);
}

TEST(Train, SeparablePairIsFitExactly) {
  Dataset ds{{{{-1.0, 0.0}, -1}, {{1.0, 0.0}, 1}}, 2, ""};
  auto [m, trace] = train(ds, config(TrainMode::atro, 0.3, 0.01, 2000));
  const auto rep = evaluate(m, ds, attack_spec(AttackMethod::analytic_linear, 0.01), {1.0, 1.0, 0.3});
  EXPECT_EQ(rep.mean_loss_01c, 0.0);
  EXPECT_EQ(rep.metrics.rej, 0.0);
  EXPECT_EQ(rep.metrics.err, 0.0);
}

TEST(Train, LowerCostRejectsMore) {
  auto ds = gaussian_clusters(200, 2, 1.0, 1.0, 11);
  const double rej_low = rejection_rate(train(ds, config(TrainMode::mh, 0.1)).first, ds);
  const double rej_high = rejection_rate(train(ds, config(TrainMode::mh, 0.4)).first, ds);
  EXPECT_GE(rej_low, rej_high);
}

TEST(Train, BaselinesNeverReject) {
  auto ds = gaussian_clusters(100, 3, 1.0, 1.0, 12);
  for (auto mode : {TrainMode::svm, TrainMode::at}) {
    auto m = train(ds, config(mode, 0.3, mode == TrainMode::at ? 0.05 : 0.0)).first;
    EXPECT_TRUE(m.rejection_disabled());
    for (const auto& s : ds.samples) EXPECT_FALSE(decide(m, s.x).rejected());
  }
}

TEST(Train, BestSoFarEnvelopeAndObjectiveConsistency) {
  auto ds = gaussian_clusters(80, 3, 1.5, 1.0, 13);
  for (auto mode : {TrainMode::svm, TrainMode::at, TrainMode::mh, TrainMode::atro}) {
    const double eps = mode == TrainMode::at || mode == TrainMode::atro ? 0.05 : 0.0;
    auto cfg = config(mode, 0.3, eps, 200);
    auto [m, trace] = train(ds, cfg);
    ASSERT_EQ(trace.objective.size(), 201u);
    for (std::size_t t = 1; t < trace.best.size(); ++t) EXPECT_LE(trace.best[t], trace.best[t - 1]);
    EXPECT_NEAR(objective(m, ds, cfg), trace.best.back(), 1e-9);
  }
}

TEST(Train, RandomFourierObjectiveConsistency) {
  auto ds = two_moons(60, 0.1, 4);
  auto cfg = config(TrainMode::atro, 0.3, 0.01, 100);
  cfg.features.kind = FeatureKind::random_fourier;
  cfg.features.dim = 30;
  cfg.features.sigma = 0.5;
  auto [m, trace] = train(ds, cfg);
  EXPECT_EQ(m.feature_dim(), 30u);
  EXPECT_NEAR(objective(m, ds, cfg), trace.best.back(), 1e-9);
}

TEST(Train, ZeroRadiusCollapsesToBaselines) {
  auto ds = gaussian_clusters(60, 2, 1.0, 1.0, 14);
  EXPECT_EQ(train(ds, config(TrainMode::atro, 0.3, 0.0)).second, train(ds, config(TrainMode::mh, 0.3, 0.0)).second);
  EXPECT_EQ(train(ds, config(TrainMode::at, 0.3, 0.0)).second, train(ds, config(TrainMode::svm, 0.3, 0.0)).second);
}

TEST(Train, DeterministicUnderSeed) {
  auto ds = gaussian_clusters(40, 2, 1.0, 1.0, 15);
  auto cfg = config(TrainMode::atro, 0.2, 0.02, 100);
  cfg.features.kind = FeatureKind::random_fourier;
  cfg.features.dim = 20;
  auto a = train(ds, cfg), b = train(ds, cfg);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first.theta, b.first.theta);
  EXPECT_EQ(a.first.gamma, b.first.gamma);
}

TEST(Train, HugeRegularizerShrinksWeights) {
  auto ds = gaussian_clusters(50, 3, 2.0, 1.0, 16);
  auto cfg = config(TrainMode::atro);
  cfg.lambda *= 1e6;
  cfg.lambda_prime *= 1e6;
  auto [m, trace] = train(ds, cfg);
  EXPECT_LT(norm2(m.theta), 1e-2);
  EXPECT_LT(norm2(m.gamma), 1e-2);
  // the zero-weight envelope: at most n, reached by the starting point
  EXPECT_LE(trace.best.back(), 50.0);
  EXPECT_EQ(trace.objective.front(), 50.0);
}

TEST(Train, DivergenceIsReported) {
  auto ds = gaussian_clusters(20, 2, 1.0, 1.0, 17);
  auto cfg = config(TrainMode::svm, 0.3, 0.0, 50);
  // without l2 terms the proximal shrink no longer bounds the iterates
  cfg.lambda = cfg.lambda_prime = 0.0;
  cfg.eta0 = 1e307;
  try {
    train(ds, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos);
  }
}

TEST(Train, TraceCsvLayout) {
  auto ds = gaussian_clusters(10, 2, 1.0, 1.0, 18);
  auto trace = train(ds, config(TrainMode::mh, 0.3, 0.0, 3)).second;
  const auto csv = trace.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,objective,best,theta_norm,gamma_norm");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(CrossValidate, SingleConfigAndTies) {
  auto ds = gaussian_clusters(30, 2, 2.0, 1.0, 19);
  auto a = config(TrainMode::atro, 0.3, 0.0, 50);
  auto res = cross_validate(ds, {a}, 3, 1);
  EXPECT_EQ(res.best_index, 0u);
  EXPECT_EQ(res.best, a);
  auto b = config(TrainMode::atro, 0.2, 0.0, 50);
  auto tie = cross_validate(ds, {b, b, a}, 3, 1);
  EXPECT_EQ(tie.table[0].mean_risk, tie.table[1].mean_risk);
  EXPECT_NE(tie.best_index, 1u);
  EXPECT_THROW(cross_validate(ds, {}, 3, 1), ConfigError);
  EXPECT_THROW(cross_validate(ds, {a}, 1, 1), ConfigError);
}

TEST(CrossValidate, TwoFoldsOnTenSamples) {
  auto ds = gaussian_clusters(10, 2, 2.0, 1.0, 20);
  auto cfg = config(TrainMode::mh, 0.3, 0.0, 50);
  auto res = cross_validate(ds, {cfg}, 2, 5, 0.05);
  ASSERT_EQ(res.table[0].fold_risks.size(), 2u);
  const auto perm = permutation(10, 5);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < 10; ++i) (i / 5 == k ? va : tr).push_back(perm[i]);
    ASSERT_EQ(tr.size(), 5u);
    auto m = train(subset(ds, tr), cfg).first;
    EXPECT_EQ(res.table[0].fold_risks[k], adversarial_risk_01c(m, subset(ds, va), 0.05, cfg.params));
  }
}
