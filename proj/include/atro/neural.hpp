#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
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

enum class Activation { relu, tanh };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("neural.activation", "unknown activation '" + std::string(s) + "'");
}

/// Dense layer y = W x + b, W row-major (out x in).
struct Layer {
  std::size_t in = 0, out = 0;
  Vector w, b;

  bool operator==(const Layer&) const = default;
};

/// Fully connected trunk with two scalar heads read off the last layer: row 0 is f, row 1 is r.
/// Hidden layers use `act`; the output layer is linear.
struct ToyNet {
  std::vector<Layer> layers;
  Activation act = Activation::tanh;

  /// Zero-mean Gaussian init with variance 1/fan_in, biases 0.
  static ToyNet init(std::size_t input_dim, const std::vector<std::size_t>& hidden, Activation act,
                     std::uint64_t seed) {
    if (input_dim == 0) throw ConfigError("neural.input_dim", "must be positive");
    ToyNet net;
    net.act = act;
    Rng rng(seed);
    std::size_t in = input_dim;
    auto widths = hidden;
    widths.push_back(2);
    for (std::size_t out : widths) {
      if (out == 0) throw ConfigError("neural.hidden", "layer widths must be positive");
      Layer l{in, out, Vector(in * out), Vector(out, 0.0)};
      const double s = 1.0 / std::sqrt(static_cast<double>(in));
      for (auto& v : l.w) v = s * standard_normal(rng);
      net.layers.push_back(std::move(l));
      in = out;
    }
    return net;
  }

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  /// Weights of the f head in the last layer, the vector carrying the l2 penalty.
  std::span<const double> top_weights() const {
    const auto& l = layers.back();
    return {l.w.data(), l.in};
  }

  /// Parameters flattened layer by layer, weights before biases.
  Vector flat() const {
    Vector out;
    out.reserve(param_count());
    for (const auto& l : layers) {
      out.insert(out.end(), l.w.begin(), l.w.end());
      out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
  }

  void set_flat(std::span<const double> p) {
    if (p.size() != param_count()) throw DimensionError("ToyNet::set_flat: wrong parameter count");
    std::size_t k = 0;
    for (auto& l : layers) {
      for (auto& v : l.w) v = p[k++];
      for (auto& v : l.b) v = p[k++];
    }
  }

  void check() const {
    if (layers.empty() || layers.back().out != 2) throw DimensionError("ToyNet needs a final layer with 2 outputs");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.w.size() != l.in * l.out || l.b.size() != l.out) throw DimensionError("ToyNet layer shape mismatch");
      if (i > 0 && l.in != layers[i - 1].out) throw DimensionError("ToyNet layers do not chain");
      if (!all_finite(l.w) || !all_finite(l.b)) throw NumericError("ToyNet parameters must be finite");
    }
  }

  bool operator==(const ToyNet&) const = default;
};

namespace detail {

inline double activate(Activation a, double v) { return a == Activation::relu ? std::max(v, 0.0) : std::tanh(v); }

/// Derivative expressed through the activation output h (and the pre-activation for relu).
inline double activate_prime(Activation a, double pre, double h) {
  return a == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

struct Tape {
  std::vector<Vector> pre;   // pre-activations per layer
  std::vector<Vector> post;  // post[0] = x, post[i+1] = output of layer i
};

inline Tape run(const ToyNet& net, std::span<const double> x) {
  if (x.size() != net.input_dim())
    throw DimensionError("ToyNet expects dimension " + std::to_string(net.input_dim()) + ", got " +
                         std::to_string(x.size()));
  Tape t;
  t.post.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& l = net.layers[li];
    const Vector& in = t.post.back();
    Vector z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double a = l.b[o];
      const double* row = l.w.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) a += row[i] * in[i];
      z[o] = a;
    }
    Vector h = z;
    if (li + 1 < net.layers.size())
      for (auto& v : h) v = activate(net.act, v);
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(h));
  }
  return t;
}

}  // namespace detail

inline Scores forward(const ToyNet& net, std::span<const double> x) {
  const auto t = detail::run(net, x);
  const auto& out = t.post.back();
  return {out[0], out[1]};
}

struct NeuralTrainConfig {
  SurrogateParams params;
  double lambda_w = 1e-3;
  AttackSpec attack = attack_spec(AttackMethod::pgd);
  bool eps_uniform_scaling = false;  // draw each inner radius from U(0, attack.eps)
  int epochs = 100;
  std::size_t batch = 32;
  double lr = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{32, 32};
  Activation activation = Activation::tanh;

  void validate(const std::string& prefix = "neural") const {
    params.validate(prefix);
    if (!(lambda_w >= 0.0)) throw ConfigError(prefix + ".lambda_w", "must be >= 0");
    if (attack.method != AttackMethod::pgd && attack.method != AttackMethod::none)
      throw ConfigError(prefix + ".attack.method", "must be pgd or none");
    attack.validate(prefix + ".attack");
    if (epochs < 1) throw ConfigError(prefix + ".epochs", "must be a positive integer");
    if (batch < 1) throw ConfigError(prefix + ".batch", "must be a positive integer");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError(prefix + ".lr", "must be > 0");
    for (auto h : hidden)
      if (h == 0) throw ConfigError(prefix + ".hidden", "layer widths must be positive");
  }

  bool operator==(const NeuralTrainConfig&) const = default;
};

/// Squared maximum hinge at the net output, without the weight penalty.
inline double net_data_loss(const ToyNet& net, std::span<const double> x, Label y, const SurrogateParams& p) {
  const double m = loss_mh(forward(net, x), y, p);
  return m * m;
}

/// max(1 + (alpha/2)(r - y f), c (1 - beta r), 0)^2 + (lambda_w / 2) ||w||^2.
inline double net_loss(const ToyNet& net, std::span<const double> x, Label y, const NeuralTrainConfig& cfg) {
  const double wn = norm2(net.top_weights());
  return net_data_loss(net, x, y, cfg.params) + 0.5 * cfg.lambda_w * wn * wn;
}

namespace detail {

/// dloss/d(f, r) of the squared maximum hinge; the classification piece wins ties.
inline std::pair<double, double> head_grad(Scores s, Label y, const SurrogateParams& p, double* loss) {
  const double a = mh_classify_term(s.f, s.r, y, p);
  const double b = mh_reject_term(s.r, p);
  const double m = std::max({a, b, 0.0});
  if (loss) *loss = m * m;
  switch (mh_branch(a, b)) {
    case MhBranch::classify: return {2.0 * m * (-0.5 * p.alpha * y), 2.0 * m * 0.5 * p.alpha};
    case MhBranch::reject: return {0.0, 2.0 * m * (-p.c * p.beta)};
    case MhBranch::inactive: break;
  }
  return {0.0, 0.0};
}

/// Reverse pass from output gradient `g_out`. Accumulates parameter gradients into `gp` (flat layout)
/// when given and returns the input gradient.
inline Vector backward(const ToyNet& net, const Tape& t, Vector g, Vector* gp) {
  std::vector<std::size_t> offset(net.layers.size());
  std::size_t k = 0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    offset[li] = k;
    k += net.layers[li].w.size() + net.layers[li].b.size();
  }
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const auto& l = net.layers[li];
    if (li + 1 < net.layers.size())
      for (std::size_t o = 0; o < l.out; ++o) g[o] *= activate_prime(net.act, t.pre[li][o], t.post[li + 1][o]);
    const Vector& in = t.post[li];
    if (gp) {
      double* gw = gp->data() + offset[li];
      double* gb = gw + l.w.size();
      for (std::size_t o = 0; o < l.out; ++o) {
        for (std::size_t i = 0; i < l.in; ++i) gw[o * l.in + i] += g[o] * in[i];
        gb[o] += g[o];
      }
    }
    Vector gin(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = l.w.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) gin[i] += row[i] * g[o];
    }
    g = std::move(gin);
  }
  return g;
}

}  // namespace detail

/// Gradient of net_loss with respect to the flat parameter vector (layout of ToyNet::flat).
inline Vector grad_params(const ToyNet& net, std::span<const double> x, Label y, const NeuralTrainConfig& cfg) {
  const auto t = detail::run(net, x);
  const auto [gf, gr] = detail::head_grad({t.post.back()[0], t.post.back()[1]}, y, cfg.params, nullptr);
  Vector gp(net.param_count(), 0.0);
  detail::backward(net, t, {gf, gr}, &gp);
  // weight penalty on the f row of the last layer
  std::size_t off = net.param_count() - net.layers.back().w.size() - net.layers.back().b.size();
  const auto w = net.top_weights();
  for (std::size_t i = 0; i < w.size(); ++i) gp[off + i] += cfg.lambda_w * w[i];
  if (!all_finite(gp)) throw NumericError("grad_params: non-finite gradient");
  return gp;
}

/// Gradient of net_loss with respect to the input x.
inline Vector grad_input(const ToyNet& net, std::span<const double> x, Label y, const NeuralTrainConfig& cfg) {
  const auto t = detail::run(net, x);
  const auto [gf, gr] = detail::head_grad({t.post.back()[0], t.post.back()[1]}, y, cfg.params, nullptr);
  Vector g = detail::backward(net, t, {gf, gr}, nullptr);
  if (!all_finite(g)) throw NumericError("grad_input: non-finite gradient");
  return g;
}

/// Gradient oracle over inputs for the attack module (data loss only; the penalty does not depend on x).
struct NetOracle {
  const ToyNet* net;
  SurrogateParams params;

  LossGrad operator()(std::span<const double> x, Label y) const {
    const auto t = detail::run(*net, x);
    LossGrad out;
    const auto [gf, gr] = detail::head_grad({t.post.back()[0], t.post.back()[1]}, y, params, &out.loss);
    out.grad = detail::backward(*net, t, {gf, gr}, nullptr);
    return out;
  }
};

struct NeuralTrace {
  std::vector<double> epoch_loss;  // mean outer loss at the attacked points
};

/// Minibatch SGD on the adversarial squared-MH loss. Each sample of a batch is first moved to its PGD point
/// under the current net (skipped when the attack is none or eps = 0), then the batch-mean gradient at the
/// attacked points is applied.
inline std::pair<ToyNet, NeuralTrace> train_neural(const Dataset& ds, const NeuralTrainConfig& cfg) {
  if (ds.empty()) throw Error("train_neural: empty dataset");
  cfg.validate();
  validate(ds);
  ToyNet net = ToyNet::init(ds.d, cfg.hidden, cfg.activation, derive_seed(cfg.seed, SeedStream::init));
  NeuralTrace trace;
  const bool adversarial = cfg.attack.method == AttackMethod::pgd && cfg.attack.eps > 0.0;
  const std::size_t np = net.param_count();
  Vector g(np), params = net.flat();

  for (int e = 0; e < cfg.epochs; ++e) {
    const auto order = permutation(ds.size(), derive_seed(cfg.seed, static_cast<std::uint64_t>(e) + 1000));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = ds.samples[order[k]];
        Vector x = s.x;
        if (adversarial) {
          AttackSpec spec = cfg.attack;
          spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(order[k]) + 7919 * (e + 1));
          if (cfg.eps_uniform_scaling) {
            Rng r(spec.seed ^ 0x5DEECE66DULL);
            spec.eps = uniform(r, 0.0, cfg.attack.eps);
            spec.step_size.reset();
          }
          const auto p = pgd(NetOracle{&net, cfg.params}, x, s.y, spec);
          for (std::size_t i = 0; i < x.size(); ++i) x[i] += p.delta[i];
        }
        total += net_loss(net, x, s.y, cfg);
        const auto gi = grad_params(net, x, s.y, cfg);
        for (std::size_t i = 0; i < np; ++i) g[i] += gi[i];
      }
      const double scale = cfg.lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < np; ++i) params[i] -= scale * g[i];
      net.set_flat(params);
    }
    const double mean = total / static_cast<double>(ds.size());
    if (!std::isfinite(mean) || !all_finite(params))
      throw NumericError("train_neural: diverged at epoch " + std::to_string(e) + " (learning rate " +
                         std::to_string(cfg.lr) + ")");
    trace.epoch_loss.push_back(mean);
  }
  return {std::move(net), std::move(trace)};
}

}  // namespace atro
