// atro: train, attack, evaluate and bound classifier/rejector pairs from a JSON run config.
//
//   atro train --config run.json --out out/
//   atro eval --config run.json --model out/model.json --eps 0.01
//   atro bench --config data/table1_diabetes.json
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 1 anything else.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "atro/atro.hpp"

namespace fs = std::filesystem;
using namespace atro;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, data, model, mode, attack, norm;
  std::optional<double> eps, cost;
  std::optional<int> steps;
};

// Loading failures are configuration problems from the user's point of view.
struct InputError : ConfigError {
  using ConfigError::ConfigError;
};

std::string absolute_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path q(p);
  if (q.is_relative()) q = base / q;
  return fs::weakly_canonical(fs::absolute(q)).string();
}

RunConfig resolve(Command cmd, const Overrides& o) {
  RunConfig c;
  fs::path base = fs::current_path();
  if (!o.config.empty()) {
    std::string text;
    try {
      text = read_text_file(o.config);
    } catch (const Error&) {
      throw ConfigError("--config", "cannot read '" + o.config + "'");
    }
    c = run_config_from_json(parse_json_text(text, o.config));
    base = fs::absolute(fs::path(o.config)).parent_path();
  }
  c.command = cmd;
  c.data.path = absolute_path(c.data.path, base);
  c.data.test_path = absolute_path(c.data.test_path, base);
  c.model = absolute_path(c.model, base);

  const fs::path cwd = fs::current_path();
  if (o.seed) {
    c.seed = c.train.seed = c.bench.seed = c.neural.seed = c.attack.seed = *o.seed;
    c.neural.attack.seed = c.bench.attack.seed = *o.seed;
  }
  if (o.out) c.out = *o.out;
  if (o.data) c.data.path = absolute_path(*o.data, cwd);
  if (o.model) c.model = absolute_path(*o.model, cwd);
  if (o.mode) c.train.mode = parse_train_mode(*o.mode);
  if (o.cost) c.train.params.c = c.neural.params.c = *o.cost;
  if (o.attack) {
    c.attack.method = parse_attack_method(*o.attack);
    c.bench.attack.method = c.attack.method;
  }
  if (o.norm) c.attack.norm = parse_norm_kind(*o.norm);
  if (o.steps) c.attack.steps = c.bench.attack.steps = *o.steps;
  if (o.eps) {
    switch (cmd) {
      case Command::train: c.train.eps = *o.eps; break;
      case Command::bound: c.bound.eps = *o.eps; break;
      case Command::neural_train: c.neural.attack.eps = *o.eps; break;
      case Command::bench: c.bench.attack_eps = {*o.eps}; break;
      default: c.attack.eps = *o.eps; break;
    }
  }
  check_run_config(c);
  return c;
}

Dataset load_all(const RunConfig& c) {
  const auto& d = c.data;
  if (d.toy == "clusters") return gaussian_clusters(d.toy_n, 2, d.toy_separation, d.toy_noise, c.seed);
  if (d.toy == "moons") return two_moons(d.toy_n, d.toy_noise, c.seed);
  if (!fs::exists(d.path)) throw InputError("data.path", "'" + d.path + "' does not exist");
  return load_dataset(d.path, resolve_labels(d.labels), d.min_dim);
}

// Raw (unnormalized) train and test parts. A separate test file wins over the seeded split.
std::pair<Dataset, Dataset> load_splits(const RunConfig& c) {
  Dataset all = load_all(c);
  if (!c.data.test_path.empty()) {
    if (!fs::exists(c.data.test_path))
      throw InputError("data.test_path", "'" + c.data.test_path + "' does not exist");
    Dataset test = load_dataset(c.data.test_path, resolve_labels(c.data.labels), all.d);
    if (test.d > all.d) {
      for (auto& s : all.samples) s.x.resize(test.d, 0.0);
      all.d = test.d;
    }
    return {std::move(all), std::move(test)};
  }
  return split(all, c.data.train_fraction, derive_seed(c.seed, SeedStream::split));
}

RejectionModel load_model(const RunConfig& c) {
  if (!fs::exists(c.model)) throw InputError("model", "'" + c.model + "' does not exist");
  return model_from_json(parse_json_text(read_text_file(c.model), c.model));
}

class Artifacts {
 public:
  explicit Artifacts(const RunConfig& c) : dir_(c.out) {
    fs::create_directories(dir_);
    put("manifest.json", to_manifest(c).dump(2) + "\n");
  }

  void put(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cannot write '" + (dir_ / name).string() + "'");
    f << content;
    written_.push_back(name);
  }

  void put_json(const std::string& name, const Json& j) { put(name, j.dump(2) + "\n"); }

  void summary() const {
    for (const auto& w : written_) std::printf("wrote %s\n", (dir_ / w).string().c_str());
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

std::string fmt_real(double v) { return detail::format_real(v); }

std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "err,rej,pr,ta,tr,fa,fr,loss_01c,loss_01c_clean,attack,attack_eps\n";
  os << fmt_real(r.metrics.err) << ',' << fmt_real(r.metrics.rej) << ','
     << (r.metrics.pr ? fmt_real(*r.metrics.pr) : std::string("nan")) << ',' << r.counts.ta << ',' << r.counts.tr
     << ',' << r.counts.fa << ',' << r.counts.fr << ',' << fmt_real(r.mean_loss_01c) << ','
     << fmt_real(r.mean_loss_01c_clean) << ',' << to_string(r.attack.method) << ',' << fmt_real(r.attack.eps)
     << '\n';
  return os.str();
}

void print_report(const char* what, const EvalReport& r) {
  std::printf("%s: err %.4f  rej %.4f  0-1-c %.4f (clean %.4f)  TA %llu TR %llu FA %llu FR %llu\n", what,
              r.metrics.err, r.metrics.rej, r.mean_loss_01c, r.mean_loss_01c_clean,
              static_cast<unsigned long long>(r.counts.ta), static_cast<unsigned long long>(r.counts.tr),
              static_cast<unsigned long long>(r.counts.fa), static_cast<unsigned long long>(r.counts.fr));
}

AttackSpec eval_attack(const RunConfig& c) {
  AttackSpec spec = c.attack;
  spec.seed = derive_seed(c.seed, SeedStream::attack);
  return spec;
}

void cmd_train(const RunConfig& c) {
  auto [train_raw, test_raw] = load_splits(c);
  Artifacts out(c);
  auto [train_ds, stats] = normalize(train_raw, c.data.norm);
  auto [model, trace] = train(train_ds, c.train);
  model.norm_stats = stats;
  const auto rep = evaluate(model, test_raw, eval_attack(c), c.train.params);
  out.put_json("model.json", to_json(model));
  out.put("trace.csv", trace.to_csv());
  out.put("report.csv", report_csv(rep));
  out.put_json("report.json", to_json(rep));
  std::printf("trained %s on %zu samples, final objective %.6g (best %.6g)\n", to_string(c.train.mode),
              train_ds.size(), trace.objective.back(), trace.best.back());
  print_report("held-out", rep);
  out.summary();
}

void cmd_eval(const RunConfig& c) {
  const auto model = load_model(c);
  const Dataset test = load_splits(c).second;
  Artifacts out(c);
  const auto rep = evaluate(model, test, eval_attack(c), c.train.params);
  out.put("report.csv", report_csv(rep));
  out.put_json("report.json", to_json(rep));
  print_report("eval", rep);
  out.summary();
}

void cmd_attack(const RunConfig& c) {
  const auto model = load_model(c);
  const Dataset test = load_splits(c).second;
  if (test.d != model.input_dim()) throw DimensionError("attack: dataset and model dimensions differ");
  Artifacts out(c);
  const AttackSpec spec = eval_attack(c);
  std::ostringstream os;
  os << "index,y,f_clean,r_clean,f_attacked,r_attacked,decision,winner,delta_linf\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& s = test.samples[i];
    const Vector z = model.features(s.x);
    const auto [zp, who] = attack_linear(model, z, s.y, spec, c.train.params);
    const Scores a = model.scores_features(z), b = model.scores_features(zp);
    const Decision dec = decide_scores(b);
    double dl = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) dl = std::max(dl, std::abs(zp[k] - z[k]));
    os << i << ',' << s.y << ',' << fmt_real(a.f) << ',' << fmt_real(a.r) << ',' << fmt_real(b.f) << ','
       << fmt_real(b.r) << ',' << (dec.rejected() ? "reject" : std::to_string(dec.label())) << ','
       << to_string(who) << ',' << fmt_real(dl) << '\n';
  }
  const auto rep = evaluate(model, test, spec, c.train.params);
  out.put("attacks.csv", os.str());
  out.put("report.csv", report_csv(rep));
  out.put_json("report.json", to_json(rep));
  print_report("attack", rep);
  out.summary();
}

void cmd_bound(const RunConfig& c) {
  const auto model = load_model(c);
  const Dataset train_raw = load_splits(c).first;
  Artifacts out(c);
  const auto r = theorem1_bound(model, train_raw, c.bound, derive_seed(c.seed, SeedStream::monte_carlo));
  std::ostringstream os;
  os << "empirical_risk,rad_zeta,rad_gamma,eps_term,conf_term,total,W,q,n,d\n"
     << fmt_real(r.empirical_risk) << ',' << fmt_real(r.rad_zeta) << ',' << fmt_real(r.rad_gamma) << ','
     << fmt_real(r.eps_term) << ',' << fmt_real(r.conf_term) << ',' << fmt_real(r.total) << ',' << fmt_real(r.W)
     << ',' << fmt_real(r.q) << ',' << r.n << ',' << r.d << '\n';
  out.put("bound.csv", os.str());
  out.put_json("bound.json", to_json(r));
  std::printf("bound: total %.6g = empirical %.6g + rad_zeta %.6g + rad_gamma %.6g + eps %.6g + conf %.6g\n",
              r.total, r.empirical_risk, r.rad_zeta, r.rad_gamma, r.eps_term, r.conf_term);
  out.summary();
}

void cmd_bench(const RunConfig& c) {
  const Dataset ds = load_all(c);
  BenchConfig bc = c.bench;
  bc.norm = c.data.norm;
  Artifacts out(c);
  const auto res = benchmark(ds, bc);
  const std::string table = bench_table(res);
  out.put("bench.csv", bench_csv(res));
  out.put("bench.txt", table);
  out.put_json("bench.json", to_json(res));
  std::fputs(table.c_str(), stdout);
  out.summary();
}

void cmd_neural_train(const RunConfig& c) {
  auto [train_raw, test_raw] = load_splits(c);
  Artifacts out(c);
  auto [train_ds, stats] = normalize(train_raw, c.data.norm);
  const Dataset test_ds = stats.apply(test_raw);
  auto [net, trace] = train_neural(train_ds, c.neural);
  // linear-only attacks fall back to PGD on the squared maximum hinge for a net
  AttackSpec spec = eval_attack(c);
  if (spec.method == AttackMethod::analytic_linear) spec.method = AttackMethod::pgd;
  const auto rep = evaluate(net, test_ds, spec, c.neural.params);
  Json model = to_json(net);
  model["norm_stats"] = to_json(stats);
  out.put_json("model.json", model);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e)
    csv += std::to_string(e + 1) + ',' + fmt_real(trace.epoch_loss[e]) + '\n';
  out.put("trace.csv", csv);
  out.put("report.csv", report_csv(rep));
  out.put_json("report.json", to_json(rep));
  print_report("held-out", rep);
  out.summary();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial training with a rejection option"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<Command, std::string>> cmds{
      {Command::train, "train a linear classifier/rejector pair"},
      {Command::eval, "evaluate a saved model under attack"},
      {Command::attack, "attack a saved model and dump per-sample results"},
      {Command::bound, "compute the generalization bound of a saved model"},
      {Command::bench, "run the repeated-split benchmark grid"},
      {Command::neural_train, "train and evaluate a two-head toy network"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [cmd, help] : cmds) {
    auto* s = app.add_subcommand(to_string(cmd), help);
    s->add_option("--config", o.config, "JSON run config");
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--data", o.data, "dataset file (LIBSVM or .csv)");
    s->add_option("--model", o.model, "model JSON from a previous train run");
    s->add_option("--eps", o.eps, "radius: training for train/neural-train, attack for eval/attack/bench, bound");
    s->add_option("--cost", o.cost, "rejection cost c");
    s->add_option("--mode", o.mode, "svm, at, mh or atro");
    s->add_option("--attack", o.attack, "none, analytic_linear, fgsm or pgd");
    s->add_option("--steps", o.steps, "attack steps");
    s->add_option("--norm", o.norm, "linf or l2");
    subs.push_back(s);
  }
  CLI11_PARSE(app, argc, argv);

  Command cmd = Command::train;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) cmd = cmds[i].first;

  try {
    const RunConfig c = resolve(cmd, o);
    switch (cmd) {
      case Command::train: cmd_train(c); break;
      case Command::eval: cmd_eval(c); break;
      case Command::attack: cmd_attack(c); break;
      case Command::bound: cmd_bound(c); break;
      case Command::bench: cmd_bench(c); break;
      case Command::neural_train: cmd_neural_train(c); break;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
