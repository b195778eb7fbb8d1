#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "atro/attack.hpp"
#include "atro/error.hpp"
#include "atro/ingest.hpp"
#include "atro/loss.hpp"
#include "atro/model.hpp"
#include "atro/neural.hpp"
#include "atro/rng.hpp"
#include "atro/solver.hpp"

namespace atro {

/// Outcome counts after perturbation. TR: rejected and the classifier would have been wrong.
/// FR: rejected though it would have been right. TA / FA: accepted and right / wrong.
struct RejectConfusion {
  std::uint64_t ta = 0, tr = 0, fa = 0, fr = 0;

  std::uint64_t total() const noexcept { return ta + tr + fa + fr; }

  void add(const Decision& d, Label y) {
    const bool wrong = d.label() != y;
    if (d.rejected())
      ++(wrong ? tr : fr);
    else
      ++(wrong ? fa : ta);
  }

  RejectConfusion& operator+=(const RejectConfusion& o) {
    ta += o.ta;
    tr += o.tr;
    fa += o.fa;
    fr += o.fr;
    return *this;
  }

  bool operator==(const RejectConfusion&) const = default;
};

struct Metrics {
  double err = 0.0;
  double rej = 0.0;
  std::optional<double> pr;  // empty when nothing was rejected
};

/// err = FA / total, rej = (TR + FR) / total, pr = TR / (TR + FR).
inline Metrics metrics(const RejectConfusion& c) {
  const auto n = c.total();
  if (n == 0) throw Error("metrics: no evaluated samples");
  Metrics m;
  m.err = static_cast<double>(c.fa) / static_cast<double>(n);
  const auto rejected = c.tr + c.fr;
  m.rej = static_cast<double>(rejected) / static_cast<double>(n);
  if (rejected > 0) m.pr = static_cast<double>(c.tr) / static_cast<double>(rejected);
  return m;
}

inline constexpr std::size_t kCandidateKinds = 5;

struct EvalReport {
  RejectConfusion counts;
  Metrics metrics;
  AttackSpec attack;
  double mean_loss_01c = 0.0;       // under the attack
  double mean_loss_01c_clean = 0.0;
  std::array<std::uint64_t, kCandidateKinds> wins{};  // indexed by Candidate
};

/// Perturbed feature vector for one sample under `spec`, and which candidate produced it.
/// analytic_linear runs the full candidate-set attack {clean, delta_A, delta_B, PGD on MH}.
inline std::pair<Vector, Candidate> attack_linear(const RejectionModel& m, const Vector& z, Label y,
                                                  const AttackSpec& spec, const SurrogateParams& p) {
  if (spec.method == AttackMethod::none || spec.eps == 0.0) return {z, Candidate::clean};
  switch (spec.method) {
    case AttackMethod::analytic_linear: {
      auto wc = worst_case_01c(m, z, y, spec.eps, p.c, WorstCaseMode::heuristic, p, spec.steps);
      return {add(z, wc.delta), wc.winner};
    }
    case AttackMethod::fgsm: return {add(z, fgsm(LinearMhOracle{&m, p}, z, y, spec.eps).delta), Candidate::pgd};
    case AttackMethod::pgd: return {add(z, pgd(LinearMhOracle{&m, p}, z, y, spec).delta), Candidate::pgd};
    case AttackMethod::none: break;
  }
  return {z, Candidate::clean};
}

/// Attacks every sample of `ds` in feature space and tallies the rejection-aware outcomes.
inline EvalReport evaluate(const RejectionModel& m, const Dataset& ds, const AttackSpec& spec,
                           const SurrogateParams& p = {}) {
  if (ds.empty()) throw Error("evaluate: empty dataset");
  spec.validate();
  if (ds.d != m.input_dim())
    throw DimensionError("evaluate: dataset dimension " + std::to_string(ds.d) + " but model expects " +
                         std::to_string(m.input_dim()));
  EvalReport rep;
  rep.attack = spec;
  for (const auto& s : ds.samples) {
    const Vector z = m.features(s.x);
    const auto [zp, who] = attack_linear(m, z, s.y, spec, p);
    const Scores sc = m.scores_features(zp);
    rep.counts.add(decide_scores(sc), s.y);
    rep.mean_loss_01c += loss_01c(sc, s.y, p.c);
    rep.mean_loss_01c_clean += loss_01c(m.scores_features(z), s.y, p.c);
    ++rep.wins[static_cast<std::size_t>(who)];
  }
  rep.mean_loss_01c /= static_cast<double>(ds.size());
  rep.mean_loss_01c_clean /= static_cast<double>(ds.size());
  rep.metrics = metrics(rep.counts);
  return rep;
}

inline RejectConfusion classify_outcomes(const RejectionModel& m, const Dataset& ds, const AttackSpec& spec,
                                         const SurrogateParams& p = {}) {
  return evaluate(m, ds, spec, p).counts;
}

/// Same tally for a two-head net. The attack is PGD (or FGSM) on the squared maximum hinge in input space;
/// the clean point stays a candidate, so the 0-1-c loss under attack never drops below the clean one.
inline EvalReport evaluate(const ToyNet& net, const Dataset& ds, const AttackSpec& spec, const SurrogateParams& p) {
  if (ds.empty()) throw Error("evaluate: empty dataset");
  spec.validate();
  if (spec.method == AttackMethod::analytic_linear)
    throw ConfigError("attack.method", "analytic_linear applies to linear models only");
  EvalReport rep;
  rep.attack = spec;
  const NetOracle oracle{&net, p};
  for (const auto& s : ds.samples) {
    const Scores clean = forward(net, s.x);
    Scores sc = clean;
    Candidate who = Candidate::clean;
    if (spec.method != AttackMethod::none && spec.eps > 0.0) {
      const Vector delta =
          spec.method == AttackMethod::fgsm ? fgsm(oracle, s.x, s.y, spec.eps).delta : pgd(oracle, s.x, s.y, spec).delta;
      const Scores adv = forward(net, add(s.x, delta));
      if (loss_01c(adv, s.y, p.c) > loss_01c(clean, s.y, p.c)) {
        sc = adv;
        who = Candidate::pgd;
      }
    }
    rep.counts.add(decide_scores(sc), s.y);
    rep.mean_loss_01c += loss_01c(sc, s.y, p.c);
    rep.mean_loss_01c_clean += loss_01c(clean, s.y, p.c);
    ++rep.wins[static_cast<std::size_t>(who)];
  }
  rep.mean_loss_01c /= static_cast<double>(ds.size());
  rep.mean_loss_01c_clean /= static_cast<double>(ds.size());
  rep.metrics = metrics(rep.counts);
  return rep;
}

// ---------------------------------------------------------------------------
// Multi-trial benchmark

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) throw Error("mean_std: no values");
  MeanStd r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

/// One trained configuration in a benchmark (a row label plus its training config).
struct BenchMethod {
  std::string name;
  TrainConfig train;
};

/// Rows of the usual comparison table: SVM, AT, then MH and ATRO at costs 0.2, 0.3, 0.4.
/// Everything except mode, cost and training radius is copied from `base`.
inline std::vector<BenchMethod> table1_methods(const TrainConfig& base, double train_eps = 0.001) {
  std::vector<BenchMethod> out;
  auto make = [&](TrainMode mode, double c, double eps) {
    TrainConfig t = base;
    t.mode = mode;
    t.params.c = c;
    t.eps = eps;
    return t;
  };
  out.push_back({"svm", make(TrainMode::svm, base.params.c, 0.0)});
  out.push_back({"at", make(TrainMode::at, base.params.c, train_eps)});
  for (double c : {0.2, 0.3, 0.4}) out.push_back({"mh-c" + detail::format_real(c), make(TrainMode::mh, c, 0.0)});
  for (double c : {0.2, 0.3, 0.4})
    out.push_back({"atro-c" + detail::format_real(c), make(TrainMode::atro, c, train_eps)});
  return out;
}

struct BenchConfig {
  std::vector<BenchMethod> methods;
  std::vector<double> attack_eps{0.0, 0.001, 0.01, 0.1};
  AttackSpec attack = attack_spec(AttackMethod::analytic_linear);  // eps is overridden per column
  std::size_t n_train = 500;
  int trials = 10;
  NormScheme norm = NormScheme::minmax01;
  std::uint64_t seed = 0;

  void validate(const std::string& prefix = "bench") const {
    if (methods.empty()) throw ConfigError(prefix + ".methods", "must not be empty");
    if (attack_eps.empty()) throw ConfigError(prefix + ".attack_eps", "must not be empty");
    for (double e : attack_eps)
      if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError(prefix + ".attack_eps", "entries must be >= 0");
    if (trials < 1) throw ConfigError(prefix + ".trials", "must be >= 1");
    if (n_train < 1) throw ConfigError(prefix + ".n_train", "must be >= 1");
    for (std::size_t i = 0; i < methods.size(); ++i)
      methods[i].train.validate(prefix + ".methods[" + std::to_string(i) + "].train");
    attack.validate(prefix + ".attack");
  }
};

struct BenchCell {
  std::string method;
  double cost = 0.0;
  double train_eps = 0.0;
  double attack_eps = 0.0;
  MeanStd err, rej;
  MeanStd loss_01c, loss_01c_clean;
  std::vector<double> err_trials, rej_trials;
  RejectConfusion counts;  // summed over trials
};

struct BenchResult {
  std::vector<BenchCell> cells;  // method-major, then attack eps
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int trials = 0;

  const BenchCell& at(const std::string& method, double attack_eps) const {
    for (const auto& c : cells)
      if (c.method == method && c.attack_eps == attack_eps) return c;
    throw Error("bench: no cell for " + method);
  }
};

/// Per trial: seeded split into n_train training samples and a held-out remainder, normalization fitted on
/// the training side, every method trained once and evaluated on the held-out side at every attack radius.
inline BenchResult benchmark(const Dataset& ds, const BenchConfig& cfg) {
  cfg.validate();
  if (cfg.n_train >= ds.size()) throw ConfigError("bench.n_train", "must be smaller than the dataset");
  BenchResult res;
  res.n_train = cfg.n_train;
  res.n_test = ds.size() - cfg.n_train;
  res.trials = cfg.trials;
  for (const auto& m : cfg.methods) {
    for (double e : cfg.attack_eps) {
      BenchCell c;
      c.method = m.name;
      c.cost = m.train.params.c;
      c.train_eps = m.train.eps;
      c.attack_eps = e;
      res.cells.push_back(std::move(c));
    }
  }
  std::vector<std::vector<double>> loss(res.cells.size()), clean(res.cells.size());

  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    auto [train_raw, test_raw] = split_count(ds, cfg.n_train, derive_seed(trial_seed, SeedStream::split));
    auto [train_ds, stats] = normalize(train_raw, cfg.norm);
    std::size_t cell = 0;
    for (const auto& method : cfg.methods) {
      TrainConfig tc = method.train;
      tc.seed = trial_seed;
      auto model = train(train_ds, tc).first;
      model.norm_stats = stats;
      for (double e : cfg.attack_eps) {
        AttackSpec spec = cfg.attack;
        spec.eps = e;
        spec.seed = derive_seed(trial_seed, SeedStream::attack);
        const auto rep = evaluate(model, test_raw, spec, tc.params);
        auto& c = res.cells[cell];
        c.err_trials.push_back(rep.metrics.err);
        c.rej_trials.push_back(rep.metrics.rej);
        c.counts += rep.counts;
        loss[cell].push_back(rep.mean_loss_01c);
        clean[cell].push_back(rep.mean_loss_01c_clean);
        ++cell;
      }
    }
  }
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    auto& c = res.cells[i];
    c.err = mean_std(c.err_trials);
    c.rej = mean_std(c.rej_trials);
    c.loss_01c = mean_std(loss[i]);
    c.loss_01c_clean = mean_std(clean[i]);
  }
  return res;
}

inline std::string bench_csv(const BenchResult& r) {
  std::ostringstream os;
  os << "method,cost,train_eps,attack_eps,err_mean,err_std,rej_mean,rej_std,loss01c_mean,loss01c_clean_mean,"
        "ta,tr,fa,fr\n";
  for (const auto& c : r.cells) {
    os << c.method << ',' << detail::format_real(c.cost) << ',' << detail::format_real(c.train_eps) << ','
       << detail::format_real(c.attack_eps) << ',' << detail::format_real(c.err.mean) << ','
       << detail::format_real(c.err.std) << ',' << detail::format_real(c.rej.mean) << ','
       << detail::format_real(c.rej.std) << ',' << detail::format_real(c.loss_01c.mean) << ','
       << detail::format_real(c.loss_01c_clean.mean) << ',' << c.counts.ta << ',' << c.counts.tr << ','
       << c.counts.fa << ',' << c.counts.fr << '\n';
  }
  return os.str();
}

/// Text table in the usual layout: one row per method, Err and Rej mean (std) per attack radius.
inline std::string bench_table(const BenchResult& r) {
  std::vector<double> eps;
  std::vector<std::string> methods;
  for (const auto& c : r.cells) {
    if (std::find(eps.begin(), eps.end(), c.attack_eps) == eps.end()) eps.push_back(c.attack_eps);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(18) << "attack eps";
  for (double e : eps) os << std::setw(30) << e;
  os << '\n' << std::setw(18) << "method";
  for (std::size_t i = 0; i < eps.size(); ++i) os << std::setw(15) << "Err" << std::setw(15) << "Rej";
  os << '\n';
  for (const auto& m : methods) {
    os << std::setw(18) << m;
    for (double e : eps) {
      const auto& c = r.at(m, e);
      std::ostringstream a, b;
      a << std::fixed << std::setprecision(3) << c.err.mean << " (" << c.err.std << ")";
      b << std::fixed << std::setprecision(3) << c.rej.mean << " (" << c.rej.std << ")";
      os << std::setw(15) << a.str() << std::setw(15) << b.str();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace atro
