#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atro/io.hpp"

namespace atro {

enum class Command { train, eval, attack, bound, bench, neural_train };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::train: return "train";
    case Command::eval: return "eval";
    case Command::attack: return "attack";
    case Command::bound: return "bound";
    case Command::bench: return "bench";
    case Command::neural_train: return "neural-train";
  }
  return "?";
}

inline Command parse_command(std::string_view s) {
  if (s == "train") return Command::train;
  if (s == "eval") return Command::eval;
  if (s == "attack") return Command::attack;
  if (s == "bound") return Command::bound;
  if (s == "bench") return Command::bench;
  if (s == "neural-train" || s == "neural_train") return Command::neural_train;
  throw ConfigError("command", "unknown subcommand '" + std::string(s) + "'");
}

/// Where the samples come from: a file (LIBSVM or .csv) or a seeded toy generator.
struct DataConfig {
  std::string path;                 // dataset file; empty when a toy generator is used
  std::string toy;                  // "", "clusters" or "moons"
  std::size_t toy_n = 400;
  double toy_separation = 2.0;      // clusters
  double toy_noise = 0.5;           // cluster spread or moon jitter
  std::string labels = "auto";      // "auto" (+1/-1, or 0/1), "pm1", "01", or "neg,pos" tokens
  std::size_t min_dim = 0;
  NormScheme norm = NormScheme::minmax01;
  double train_fraction = 0.8;
  std::string test_path;            // optional separate test file

  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  Command command = Command::train;
  DataConfig data;
  std::string model;  // input model file (eval, attack, bound)
  std::string out = "out";
  std::uint64_t seed = 0;
  TrainConfig train;
  AttackSpec attack = attack_spec(AttackMethod::analytic_linear);
  BoundConfig bound;
  BenchConfig bench;
  NeuralTrainConfig neural;

  bool operator==(const RunConfig& o) const {
    return command == o.command && data == o.data && model == o.model && out == o.out && seed == o.seed &&
           train == o.train && attack == o.attack && bound == o.bound && bench_equal(bench, o.bench) &&
           neural == o.neural;
  }

 private:
  static bool bench_equal(const BenchConfig& a, const BenchConfig& b) {
    if (a.methods.size() != b.methods.size()) return false;
    for (std::size_t i = 0; i < a.methods.size(); ++i)
      if (a.methods[i].name != b.methods[i].name || !(a.methods[i].train == b.methods[i].train)) return false;
    return a.attack_eps == b.attack_eps && a.attack == b.attack && a.n_train == b.n_train && a.trials == b.trials &&
           a.norm == b.norm && a.seed == b.seed;
  }
};

inline LabelMap resolve_labels(const std::string& spec) {
  if (spec == "pm1") return LabelMap::identity();
  if (spec == "01") return LabelMap::zero_one();
  if (spec == "auto") {
    LabelMap m = LabelMap::identity();
    m.map("0", -1);
    return m;
  }
  const auto comma = spec.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == spec.size())
    throw ConfigError("data.labels", "must be auto, pm1, 01 or 'neg,pos'");
  LabelMap m;
  m.map(spec.substr(0, comma), -1);
  m.map(spec.substr(comma + 1), 1);
  return m;
}

inline Json to_json(const DataConfig& d) {
  return {{"path", d.path},
          {"toy", d.toy},
          {"toy_n", d.toy_n},
          {"toy_separation", d.toy_separation},
          {"toy_noise", d.toy_noise},
          {"labels", d.labels},
          {"min_dim", d.min_dim},
          {"norm", to_string(d.norm)},
          {"train_fraction", d.train_fraction},
          {"test_path", d.test_path}};
}

inline void from_json(const Json& j, const std::string& path, DataConfig& d) {
  json_detail::ObjectReader r(j, path);
  r.opt("path", d.path);
  r.opt("toy", d.toy);
  r.opt("toy_n", d.toy_n);
  r.opt("toy_separation", d.toy_separation);
  r.opt("toy_noise", d.toy_noise);
  r.opt("labels", d.labels);
  r.opt("min_dim", d.min_dim);
  r.opt_enum("norm", d.norm, parse_norm_scheme);
  r.opt("train_fraction", d.train_fraction);
  r.opt("test_path", d.test_path);
  r.finish();
}

inline Json to_json(const BenchConfig& b) {
  Json methods = Json::array();
  for (const auto& m : b.methods) methods.push_back({{"name", m.name}, {"train", to_json(m.train)}});
  return {{"methods", methods},       {"attack_eps", b.attack_eps}, {"attack", to_json(b.attack)},
          {"n_train", b.n_train},     {"trials", b.trials},         {"norm", to_string(b.norm)},
          {"seed", b.seed}};
}

inline void from_json(const Json& j, const std::string& path, BenchConfig& b) {
  json_detail::ObjectReader r(j, path);
  if (r.has("methods")) {
    const Json& ms = r.at("methods");
    if (!ms.is_array()) throw ConfigError(r.path("methods"), "must be an array");
    b.methods.clear();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string p = r.path("methods") + "[" + std::to_string(i) + "]";
      json_detail::ObjectReader mr(ms[i], p);
      BenchMethod m;
      mr.req("name", m.name);
      if (mr.has("train")) from_json(mr.at("train"), mr.path("train"), m.train);
      mr.finish();
      b.methods.push_back(std::move(m));
    }
  }
  r.opt("attack_eps", b.attack_eps);
  if (r.has("attack")) from_json(r.at("attack"), r.path("attack"), b.attack);
  r.opt("n_train", b.n_train);
  r.opt("trials", b.trials);
  r.opt_enum("norm", b.norm, parse_norm_scheme);
  r.opt("seed", b.seed);
  r.finish();
}

/// Fully materialized configuration, every default written out. Feeding it back through
/// validate_config reproduces the same RunConfig.
inline Json to_manifest(const RunConfig& c) {
  return {{"command", to_string(c.command)},
          {"data", to_json(c.data)},
          {"model", c.model},
          {"out", c.out},
          {"seed", c.seed},
          {"train", to_json(c.train)},
          {"attack", to_json(c.attack)},
          {"bound", to_json(c.bound)},
          {"bench", to_json(c.bench)},
          {"neural", to_json(c.neural)}};
}

/// Checks every nested invariant and reports the first violation by field path.
inline void check_run_config(const RunConfig& c) {
  const auto& d = c.data;
  if (!d.toy.empty() && d.toy != "clusters" && d.toy != "moons")
    throw ConfigError("data.toy", "must be clusters or moons");
  if (d.toy.empty() && d.path.empty()) throw ConfigError("data.path", "is required (or set data.toy)");
  if (!d.toy.empty() && d.toy_n < 2) throw ConfigError("data.toy_n", "must be >= 2");
  if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0))
    throw ConfigError("data.train_fraction", "must lie in (0, 1)");
  resolve_labels(d.labels);
  c.train.validate("train");
  c.attack.validate("attack");
  c.bound.validate("bound");
  c.neural.validate("neural");
  if (c.command == Command::bench) c.bench.validate("bench");
  if ((c.command == Command::eval || c.command == Command::attack || c.command == Command::bound) &&
      c.model.empty())
    throw ConfigError("model", "is required for " + std::string(to_string(c.command)));
}

/// Sub-seeds that the JSON leaves out default to the master seed.
inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  json_detail::ObjectReader r(j, "");
  r.opt_enum("command", c.command, parse_command);
  if (r.has("data")) from_json(r.at("data"), "data", c.data);
  r.opt("model", c.model);
  r.opt("out", c.out);
  r.opt("seed", c.seed);
  c.train.seed = c.bench.seed = c.neural.seed = c.attack.seed = c.seed;
  c.neural.attack.seed = c.seed;
  c.bench.attack.seed = c.seed;
  if (r.has("train")) from_json(r.at("train"), "train", c.train);
  if (r.has("attack")) from_json(r.at("attack"), "attack", c.attack);
  if (r.has("bound")) from_json(r.at("bound"), "bound", c.bound);
  if (r.has("bench")) from_json(r.at("bench"), "bench", c.bench);
  if (c.bench.methods.empty()) c.bench.methods = table1_methods(c.train);
  if (r.has("neural")) from_json(r.at("neural"), "neural", c.neural);
  r.finish();
  return c;
}

/// Parses and validates JSON text into a RunConfig.
inline RunConfig validate_config(const std::string& raw) {
  RunConfig c = run_config_from_json(parse_json_text(raw, "config"));
  check_run_config(c);
  return c;
}

}  // namespace atro
