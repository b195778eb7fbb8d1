#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "atro/attack.hpp"
#include "atro/error.hpp"
#include "atro/ingest.hpp"
#include "atro/linalg.hpp"
#include "atro/loss.hpp"
#include "atro/model.hpp"
#include "atro/rng.hpp"

namespace atro {

/// svm: hinge, no rejection. at: adversarial hinge, no rejection.
/// mh: maximum hinge with rejection. atro: adversarial maximum hinge with rejection.
enum class TrainMode { svm, at, mh, atro };

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::svm: return "svm";
    case TrainMode::at: return "at";
    case TrainMode::mh: return "mh";
    case TrainMode::atro: return "atro";
  }
  return "?";
}

inline TrainMode parse_train_mode(std::string_view s) {
  if (s == "svm") return TrainMode::svm;
  if (s == "at") return TrainMode::at;
  if (s == "mh") return TrainMode::mh;
  if (s == "atro") return TrainMode::atro;
  throw ConfigError("train.mode", "unknown mode '" + std::string(s) + "'");
}

inline bool rejects(TrainMode m) { return m == TrainMode::mh || m == TrainMode::atro; }

struct FeatureConfig {
  FeatureKind kind = FeatureKind::identity;
  std::size_t dim = 100;  // random_fourier only
  double sigma = 1.0;     // random_fourier only

  FeatureMap build(std::size_t input_dim, std::uint64_t seed) const {
    if (kind == FeatureKind::identity) return FeatureMap::identity(input_dim);
    return FeatureMap::random_fourier(input_dim, dim, sigma, seed);
  }

  bool operator==(const FeatureConfig&) const = default;
};

struct TrainConfig {
  TrainMode mode = TrainMode::atro;
  SurrogateParams params;
  double eps = 0.0;             // training radius
  double lambda = 1e-3;         // l2 weight on theta
  double lambda_prime = 1e-3;   // l2 weight on gamma
  int epochs = 2000;
  double eta0 = 0.1;
  std::uint64_t seed = 0;
  FeatureConfig features;

  void validate(const std::string& prefix = "train") const {
    auto path = [&](const char* f) { return prefix + "." + f; };
    params.validate(prefix);
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError(path("eps"), "must be >= 0");
    if ((mode == TrainMode::svm || mode == TrainMode::mh) && eps != 0.0)
      throw ConfigError(path("eps"), std::string("must be 0 for mode ") + to_string(mode));
    if (!(lambda >= 0.0)) throw ConfigError(path("lambda"), "must be >= 0");
    if (!(lambda_prime >= 0.0)) throw ConfigError(path("lambda_prime"), "must be >= 0");
    if (epochs < 1) throw ConfigError(path("epochs"), "must be a positive integer");
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw ConfigError(path("eta0"), "must be > 0");
    if (features.kind == FeatureKind::random_fourier) {
      if (features.dim == 0) throw ConfigError(path("features.dim"), "must be positive");
      if (!(features.sigma > 0.0)) throw ConfigError(path("features.sigma"), "must be > 0");
    }
  }

  bool operator==(const TrainConfig&) const = default;
};

struct TrainTrace {
  std::vector<double> objective;  // objective at the iterate entering each epoch, plus the final iterate
  std::vector<double> best;       // best-so-far envelope
  std::vector<double> theta_norm;
  std::vector<double> gamma_norm;

  std::string to_csv() const {
    std::string out = "epoch,objective,best,theta_norm,gamma_norm\n";
    for (std::size_t t = 0; t < objective.size(); ++t) {
      out += std::to_string(t) + ',' + detail::format_real(objective[t]) + ',' + detail::format_real(best[t]) + ',' +
             detail::format_real(theta_norm[t]) + ',' + detail::format_real(gamma_norm[t]) + '\n';
    }
    return out;
  }

  bool operator==(const TrainTrace&) const = default;
};

namespace detail {

/// Per-sample loss of the configured mode, with its subgradient accumulated into the output buffers.
struct SampleGrad {
  Vector theta;
  Vector gamma;
  double bias_theta = 0.0;
  double bias_gamma = 0.0;

  explicit SampleGrad(std::size_t d) : theta(d, 0.0), gamma(d, 0.0) {}

  void clear() {
    std::fill(theta.begin(), theta.end(), 0.0);
    std::fill(gamma.begin(), gamma.end(), 0.0);
    bias_theta = bias_gamma = 0.0;
  }
};

inline double sample_loss(const RejectionModel& m, std::span<const double> z, Label y, const TrainConfig& cfg,
                          SampleGrad* g) {
  const auto& p = cfg.params;
  const double eps = cfg.eps;
  const std::size_t d = z.size();

  if (!rejects(cfg.mode)) {
    const double f = m.scores_features(z).f;
    const double h = 1.0 - y * f + eps * norm1(m.gamma);
    if (h <= 0.0) return 0.0;
    if (g) {
      for (std::size_t i = 0; i < d; ++i) g->gamma[i] += -y * z[i] + eps * sgn(m.gamma[i]);
      g->bias_gamma += -y;
    }
    return h;
  }

  const auto t = adv_terms_linear(m, z, y, eps, p);
  switch (mh_branch(t.a_tilde, t.b_tilde)) {
    case MhBranch::inactive: return 0.0;
    case MhBranch::classify:
      if (g) {
        const double k = 0.5 * p.alpha;
        for (std::size_t i = 0; i < d; ++i) {
          const double s = sgn(m.theta[i] / y - m.gamma[i]);
          g->theta[i] += k * (z[i] + eps * y * s);
          g->gamma[i] += k * (-y * z[i] - eps * s);
        }
        g->bias_theta += k;
        g->bias_gamma += -k * y;
      }
      return t.a_tilde;
    case MhBranch::reject:
      if (g) {
        const double k = -p.c * p.beta;
        for (std::size_t i = 0; i < d; ++i) g->theta[i] += k * (z[i] - eps * sgn(m.theta[i]));
        g->bias_theta += k;
      }
      return t.b_tilde;
  }
  return 0.0;
}

inline double regularizer(const RejectionModel& m, const TrainConfig& cfg) {
  const double tn = norm2(m.gamma);
  double r = 0.5 * cfg.lambda_prime * tn * tn;
  if (rejects(cfg.mode)) {
    const double th = norm2(m.theta);
    r += 0.5 * cfg.lambda * th * th;
  }
  return r;
}

/// Objective on pre-featurized samples; accumulates the summed loss subgradient if `g` is given.
inline double objective_features(const RejectionModel& m, const Dataset& feats, const TrainConfig& cfg,
                                 SampleGrad* g) {
  double total = 0.0;
  for (const auto& s : feats.samples) total += sample_loss(m, s.x, s.y, cfg, g);
  return total + regularizer(m, cfg);
}

}  // namespace detail

/// Regularized training objective lambda/2 ||theta||^2 + lambda'/2 ||gamma||^2 + sum_i loss_i, where loss_i
/// is the worst-case maximum hinge (atro; mh with eps = 0) or the worst-case hinge (at; svm with eps = 0).
/// Rejection-free modes drop the theta term.
inline double objective(const RejectionModel& m, const Dataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw Error("objective: empty dataset");
  cfg.validate();
  m.check();
  return detail::objective_features(m, featurize(m, ds), cfg, nullptr);
}

/// Proximal subgradient descent on the pointwise-max form of the objective. Each epoch takes a full-batch
/// step of size eta_t = eta0 / sqrt(t + 1) along the sample-averaged loss subgradient, with the l2 terms
/// applied as an exact proximal shrink. Returns the best iterate seen.
inline std::pair<RejectionModel, TrainTrace> train(const Dataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw Error("train: empty dataset");
  cfg.validate();
  validate(ds);

  RejectionModel m = RejectionModel::zeros(cfg.features.build(ds.d, derive_seed(cfg.seed, SeedStream::features)));
  const bool with_rejection = rejects(cfg.mode);
  if (!with_rejection) m.disable_rejection();

  const Dataset feats = featurize(m, ds);
  const std::size_t dim = m.feature_dim();
  const double n = static_cast<double>(ds.size());
  detail::SampleGrad g(dim);

  TrainTrace trace;
  RejectionModel best_model = m;
  double best = std::numeric_limits<double>::infinity();

  auto record = [&](double obj, int epoch, double eta) {
    if (!std::isfinite(obj))
      throw NumericError("train: objective diverged at epoch " + std::to_string(epoch) +
                         " (learning rate " + std::to_string(eta) + ")");
    if (obj < best) {
      best = obj;
      best_model = m;
    }
    trace.objective.push_back(obj);
    trace.best.push_back(best);
    trace.theta_norm.push_back(norm2(m.theta));
    trace.gamma_norm.push_back(norm2(m.gamma));
  };

  for (int t = 0; t < cfg.epochs; ++t) {
    g.clear();
    const double eta = cfg.eta0 / std::sqrt(static_cast<double>(t) + 1.0);
    record(detail::objective_features(m, feats, cfg, &g), t, eta);

    const double step = eta / n;
    const double shrink_gamma = 1.0 / (1.0 + step * cfg.lambda_prime);
    for (std::size_t i = 0; i < dim; ++i) m.gamma[i] = (m.gamma[i] - step * g.gamma[i]) * shrink_gamma;
    m.bias_gamma -= step * g.bias_gamma;
    if (with_rejection) {
      const double shrink_theta = 1.0 / (1.0 + step * cfg.lambda);
      for (std::size_t i = 0; i < dim; ++i) m.theta[i] = (m.theta[i] - step * g.theta[i]) * shrink_theta;
      m.bias_theta -= step * g.bias_theta;
    }
  }
  record(detail::objective_features(m, feats, cfg, nullptr), cfg.epochs,
         cfg.eta0 / std::sqrt(static_cast<double>(cfg.epochs) + 1.0));
  return {std::move(best_model), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvRow {
  std::size_t config_index = 0;
  double mean_risk = 0.0;
  std::vector<double> fold_risks;
};

struct CvResult {
  std::size_t best_index = 0;
  TrainConfig best;
  std::vector<CvRow> table;
};

/// Empirical 0-1-c risk under the evaluation-time candidate-set attack of radius `eps`.
inline double adversarial_risk_01c(const RejectionModel& m, const Dataset& ds, double eps, const SurrogateParams& p,
                                   int pgd_steps = 20) {
  if (ds.empty()) throw Error("adversarial_risk_01c: empty dataset");
  double total = 0.0;
  for (const auto& s : ds.samples) {
    const Vector z = m.features(s.x);
    total += worst_case_01c(m, z, s.y, eps, p.c, WorstCaseMode::heuristic, p, pgd_steps).loss;
  }
  return total / static_cast<double>(ds.size());
}

/// k-fold selection by mean validation adversarial 0-1-c risk at radius `eval_eps`.
/// Folds are contiguous blocks of a seeded permutation; ties keep the earlier grid entry.
inline CvResult cross_validate(const Dataset& ds, const std::vector<TrainConfig>& grid, std::size_t folds,
                               std::uint64_t seed, double eval_eps = 0.0) {
  if (grid.empty()) throw ConfigError("cv.grid", "must not be empty");
  if (folds < 2) throw ConfigError("cv.folds", "must be >= 2");
  if (ds.size() < folds) throw Error("cross_validate: fewer samples than folds");

  const auto perm = permutation(ds.size(), seed);
  std::vector<std::pair<Dataset, Dataset>> parts;  // (train, validation)
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t lo = k * ds.size() / folds, hi = (k + 1) * ds.size() / folds;
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < perm.size(); ++i) (i >= lo && i < hi ? va : tr).push_back(perm[i]);
    parts.emplace_back(subset(ds, tr), subset(ds, va));
  }

  CvResult res;
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    CvRow row{gi, 0.0, {}};
    for (const auto& [tr, va] : parts) {
      auto model = train(tr, grid[gi]).first;
      row.fold_risks.push_back(adversarial_risk_01c(model, va, eval_eps, grid[gi].params));
    }
    for (double r : row.fold_risks) row.mean_risk += r;
    row.mean_risk /= static_cast<double>(folds);
    if (row.mean_risk < best_risk) {
      best_risk = row.mean_risk;
      res.best_index = gi;
    }
    res.table.push_back(std::move(row));
  }
  res.best = grid[res.best_index];
  return res;
}

}  // namespace atro
