#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "atro/attack.hpp"
#include "atro/bounds.hpp"
#include "atro/error.hpp"
#include "atro/eval.hpp"
#include "atro/ingest.hpp"
#include "atro/model.hpp"
#include "atro/neural.hpp"
#include "atro/solver.hpp"

namespace atro {

using Json = nlohmann::ordered_json;

namespace json_detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void read(const Json& j, const std::string& path, double& out) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") {
      out = std::numeric_limits<double>::infinity();
      return;
    }
  }
  if (!j.is_number()) throw ConfigError(path, "must be a number");
  out = j.get<double>();
}

inline void read(const Json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ConfigError(path, "must be a boolean");
  out = j.get<bool>();
}

inline void read(const Json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw ConfigError(path, "must be a string");
  out = j.get<std::string>();
}

inline void read(const Json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) throw ConfigError(path, "must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(path, "is out of range");
  out = static_cast<int>(v);
}

template <std::unsigned_integral U>
  requires(!std::is_same_v<U, bool>)
void read(const Json& j, const std::string& path, U& out) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "must be a non-negative integer");
  const auto v = j.get<std::uint64_t>();
  if (v > std::numeric_limits<U>::max()) throw ConfigError(path, "is out of range");
  out = static_cast<U>(v);
}

template <class T>
void read(const Json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) throw ConfigError(path, "must be an array");
  out.clear();
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

inline void read(const Json& j, const std::string& path, std::vector<bool>& out) {
  if (!j.is_array()) throw ConfigError(path, "must be an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    bool v = false;
    read(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(v);
  }
}

/// Parses an enum through its string parser and re-labels the error with the real field path.
template <class E, class Parse>
void read_enum(const Json& j, const std::string& path, E& out, Parse parse) {
  std::string s;
  read(j, path, s);
  try {
    out = parse(s);
  } catch (const Error&) {
    throw ConfigError(path, "has unknown value '" + s + "'");
  }
}

/// Field-by-field access to one JSON object. Unknown keys are rejected when the reader is finished.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& at(const char* key) {
    used_.push_back(key);
    return j_.at(key);
  }

  std::string path(const char* key) const { return join(path_, key); }

  template <class T>
  void opt(const char* key, T& out) {
    if (!has(key)) return;
    read(at(key), path(key), out);
  }

  template <class T>
  void opt(const char* key, std::optional<T>& out) {
    if (!has(key)) return;
    const Json& v = at(key);
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) {
      out.reset();
      return;
    }
    T t{};
    read(v, path(key), t);
    out = t;
  }

  template <class T>
  void req(const char* key, T& out) {
    if (!has(key)) throw ConfigError(path(key), "is required");
    read(at(key), path(key), out);
  }

  template <class E, class Parse>
  void opt_enum(const char* key, E& out, Parse parse) {
    if (!has(key)) return;
    read_enum(at(key), path(key), out, parse);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
        throw ConfigError(join(path_, it.key()), "is not a known field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

inline Json real(double v) { return std::isinf(v) ? Json("inf") : Json(v); }

}  // namespace json_detail

// ---------------------------------------------------------------------------
// SurrogateParams, AttackSpec, TrainConfig, BoundConfig, NeuralTrainConfig

inline Json to_json(const SurrogateParams& p) { return {{"alpha", p.alpha}, {"beta", p.beta}, {"c", p.c}}; }

/// Surrogate fields live inline in their parent object (alpha, beta, c).
inline void read_params_inline(json_detail::ObjectReader& r, SurrogateParams& p) {
  r.opt("alpha", p.alpha);
  r.opt("beta", p.beta);
  r.opt("c", p.c);
}

inline Json to_json(const AttackSpec& a) {
  Json j{{"method", to_string(a.method)}, {"eps", a.eps}, {"norm", to_string(a.norm)}, {"steps", a.steps}};
  j["step_size"] = a.step_size ? Json(*a.step_size) : Json("auto");
  j["random_start"] = a.random_start;
  j["seed"] = a.seed;
  return j;
}

inline void from_json(const Json& j, const std::string& path, AttackSpec& a) {
  json_detail::ObjectReader r(j, path);
  r.opt_enum("method", a.method, parse_attack_method);
  r.opt("eps", a.eps);
  r.opt_enum("norm", a.norm, parse_norm_kind);
  r.opt("steps", a.steps);
  r.opt("step_size", a.step_size);
  r.opt("random_start", a.random_start);
  r.opt("seed", a.seed);
  r.finish();
}

inline Json to_json(const FeatureConfig& f) {
  return {{"kind", to_string(f.kind)}, {"dim", f.dim}, {"sigma", f.sigma}};
}

inline void from_json(const Json& j, const std::string& path, FeatureConfig& f) {
  json_detail::ObjectReader r(j, path);
  r.opt_enum("kind", f.kind, parse_feature_kind);
  r.opt("dim", f.dim);
  r.opt("sigma", f.sigma);
  r.finish();
}

inline Json to_json(const TrainConfig& c) {
  Json j{{"mode", to_string(c.mode)}};
  j.update(to_json(c.params));
  j["eps"] = c.eps;
  j["lambda"] = c.lambda;
  j["lambda_prime"] = c.lambda_prime;
  j["epochs"] = c.epochs;
  j["eta0"] = c.eta0;
  j["seed"] = c.seed;
  j["features"] = to_json(c.features);
  return j;
}

inline void from_json(const Json& j, const std::string& path, TrainConfig& c) {
  json_detail::ObjectReader r(j, path);
  r.opt_enum("mode", c.mode, parse_train_mode);
  read_params_inline(r, c.params);
  r.opt("eps", c.eps);
  r.opt("lambda", c.lambda);
  r.opt("lambda_prime", c.lambda_prime);
  r.opt("epochs", c.epochs);
  r.opt("eta0", c.eta0);
  r.opt("seed", c.seed);
  if (r.has("features")) from_json(r.at("features"), r.path("features"), c.features);
  r.finish();
}

inline Json to_json(const BoundConfig& b) {
  Json j;
  j["W"] = b.W ? Json(*b.W) : Json("auto");
  j["p"] = json_detail::real(b.p);
  j["delta"] = b.delta;
  j["eps"] = b.eps;
  j.update(to_json(b.params));
  j["mc_draws"] = b.mc_draws;
  return j;
}

inline void from_json(const Json& j, const std::string& path, BoundConfig& b) {
  json_detail::ObjectReader r(j, path);
  r.opt("W", b.W);
  r.opt("p", b.p);
  if (r.has("q")) {
    double q = 0.0;
    json_detail::read(r.at("q"), r.path("q"), q);
    if (!(q >= 1.0)) throw ConfigError(r.path("q"), "must be >= 1 (inf allowed)");
    const double p = dual_exponent(q);
    if (r.has("p") && std::abs(1.0 / p - 1.0 / b.p) > 1e-12)
      throw ConfigError(r.path("q"), "must satisfy 1/p + 1/q = 1");
    b.p = p;
  }
  r.opt("delta", b.delta);
  r.opt("eps", b.eps);
  read_params_inline(r, b.params);
  r.opt("mc_draws", b.mc_draws);
  r.finish();
}

inline Json to_json(const NeuralTrainConfig& c) {
  Json j = to_json(c.params);
  j["lambda_w"] = c.lambda_w;
  j["attack"] = to_json(c.attack);
  j["eps_uniform_scaling"] = c.eps_uniform_scaling;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  j["hidden"] = c.hidden;
  j["activation"] = to_string(c.activation);
  return j;
}

inline void from_json(const Json& j, const std::string& path, NeuralTrainConfig& c) {
  json_detail::ObjectReader r(j, path);
  read_params_inline(r, c.params);
  r.opt("lambda_w", c.lambda_w);
  if (r.has("attack")) from_json(r.at("attack"), r.path("attack"), c.attack);
  r.opt("eps_uniform_scaling", c.eps_uniform_scaling);
  r.opt("epochs", c.epochs);
  r.opt("batch", c.batch);
  r.opt("lr", c.lr);
  r.opt("seed", c.seed);
  r.opt("hidden", c.hidden);
  r.opt_enum("activation", c.activation, parse_activation);
  r.finish();
}

// ---------------------------------------------------------------------------
// Models

inline Json to_json(const NormStats& s) {
  return {{"scheme", to_string(s.scheme)}, {"shift", s.shift}, {"scale", s.scale}, {"constant", s.constant}};
}

inline void from_json(const Json& j, const std::string& path, NormStats& s) {
  json_detail::ObjectReader r(j, path);
  r.opt_enum("scheme", s.scheme, parse_norm_scheme);
  r.opt("shift", s.shift);
  r.opt("scale", s.scale);
  r.opt("constant", s.constant);
  r.finish();
  if (s.scheme != NormScheme::none &&
      (s.shift.size() != s.scale.size() || s.shift.size() != s.constant.size()))
    throw ConfigError(path, "shift, scale and constant must have equal length");
}

inline Json to_json(const FeatureMap& f) {
  return {{"kind", to_string(f.kind())},
          {"input_dim", f.input_dim()},
          {"output_dim", f.output_dim()},
          {"sigma", f.sigma()},
          {"seed", f.seed()}};
}

/// The random Fourier weights are regenerated from the stored seed.
inline FeatureMap feature_map_from_json(const Json& j, const std::string& path) {
  json_detail::ObjectReader r(j, path);
  FeatureKind kind = FeatureKind::identity;
  std::size_t in = 0, out = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  r.opt_enum("kind", kind, parse_feature_kind);
  r.req("input_dim", in);
  r.opt("output_dim", out);
  r.opt("sigma", sigma);
  r.opt("seed", seed);
  r.finish();
  if (kind == FeatureKind::identity) return FeatureMap::identity(in);
  return FeatureMap::random_fourier(in, out, sigma, seed);
}

inline Json to_json(const RejectionModel& m) {
  return {{"feature_map", to_json(m.feature_map)}, {"theta", m.theta},           {"gamma", m.gamma},
          {"bias_theta", m.bias_theta},            {"bias_gamma", m.bias_gamma}, {"norm_stats", to_json(m.norm_stats)}};
}

inline RejectionModel model_from_json(const Json& j, const std::string& path = "model") {
  json_detail::ObjectReader r(j, path);
  RejectionModel m;
  m.feature_map = feature_map_from_json(r.at("feature_map"), r.path("feature_map"));
  r.req("theta", m.theta);
  r.req("gamma", m.gamma);
  r.opt("bias_theta", m.bias_theta);
  r.opt("bias_gamma", m.bias_gamma);
  if (r.has("norm_stats")) from_json(r.at("norm_stats"), r.path("norm_stats"), m.norm_stats);
  r.finish();
  m.check();
  return m;
}

inline Json to_json(const ToyNet& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers) layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  return {{"activation", to_string(net.act)}, {"layers", layers}};
}

inline ToyNet net_from_json(const Json& j, const std::string& path = "net") {
  json_detail::ObjectReader r(j, path);
  ToyNet net;
  r.opt_enum("activation", net.act, parse_activation);
  const Json& layers = r.at("layers");
  if (!layers.is_array()) throw ConfigError(r.path("layers"), "must be an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    json_detail::ObjectReader lr(layers[i], r.path("layers") + "[" + std::to_string(i) + "]");
    Layer l;
    lr.req("in", l.in);
    lr.req("out", l.out);
    lr.req("w", l.w);
    lr.req("b", l.b);
    lr.finish();
    net.layers.push_back(std::move(l));
  }
  r.finish();
  net.check();
  return net;
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const BoundReport& b) {
  return {{"empirical_risk", b.empirical_risk},
          {"rad_zeta", b.rad_zeta},
          {"rad_gamma", b.rad_gamma},
          {"eps_term", b.eps_term},
          {"conf_term", b.conf_term},
          {"total", b.total},
          {"W", b.W},
          {"q", json_detail::real(b.q)},
          {"n", b.n},
          {"d", b.d},
          {"rad_zeta_points", "y_i * phi(x_i)"},
          {"rad_gamma_points", "phi(x_i)"}};
}

inline Json to_json(const EvalReport& r) {
  Json wins;
  for (std::size_t i = 0; i < kCandidateKinds; ++i) wins[to_string(static_cast<Candidate>(i))] = r.wins[i];
  return {{"err", r.metrics.err},
          {"rej", r.metrics.rej},
          {"pr", r.metrics.pr ? Json(*r.metrics.pr) : Json(nullptr)},
          {"counts", {{"TA", r.counts.ta}, {"TR", r.counts.tr}, {"FA", r.counts.fa}, {"FR", r.counts.fr}}},
          {"loss_01c", r.mean_loss_01c},
          {"loss_01c_clean", r.mean_loss_01c_clean},
          {"attack", to_json(r.attack)},
          {"candidate_wins", wins},
          {"tr_semantics", "rejected and the classifier would have been wrong on the perturbed input"}};
}

inline Json to_json(const BenchResult& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"method", c.method},
                     {"cost", c.cost},
                     {"train_eps", c.train_eps},
                     {"attack_eps", c.attack_eps},
                     {"err_mean", c.err.mean},
                     {"err_std", c.err.std},
                     {"rej_mean", c.rej.mean},
                     {"rej_std", c.rej.std},
                     {"loss_01c_mean", c.loss_01c.mean},
                     {"loss_01c_clean_mean", c.loss_01c_clean.mean},
                     {"err_trials", c.err_trials},
                     {"rej_trials", c.rej_trials}});
  }
  return {{"n_train", r.n_train}, {"n_test", r.n_test}, {"trials", r.trials}, {"cells", cells}};
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

}  // namespace atro
