#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "atro/error.hpp"
#include "atro/ingest.hpp"
#include "atro/linalg.hpp"
#include "atro/rng.hpp"

namespace atro {

enum class FeatureKind { identity, random_fourier };

inline const char* to_string(FeatureKind k) { return k == FeatureKind::identity ? "identity" : "random_fourier"; }

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "identity") return FeatureKind::identity;
  if (s == "random_fourier" || s == "rff") return FeatureKind::random_fourier;
  throw Error("unknown feature map '" + std::string(s) + "'");
}

/// Explicit feature map phi. The random Fourier map approximates a Gaussian kernel of bandwidth
/// `sigma`: phi(x) = sqrt(2/D) cos(Wx + b), W_ij ~ N(0, 1/sigma^2), b_i ~ U[0, 2pi).
class FeatureMap {
 public:
  FeatureMap() = default;

  static FeatureMap identity(std::size_t input_dim) {
    FeatureMap fm;
    fm.kind_ = FeatureKind::identity;
    fm.input_dim_ = input_dim;
    fm.output_dim_ = input_dim;
    return fm;
  }

  static FeatureMap random_fourier(std::size_t input_dim, std::size_t output_dim, double sigma,
                                   std::uint64_t seed) {
    if (output_dim == 0) throw ConfigError("feature_map.dim", "must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("feature_map.sigma", "must be > 0");
    FeatureMap fm;
    fm.kind_ = FeatureKind::random_fourier;
    fm.input_dim_ = input_dim;
    fm.output_dim_ = output_dim;
    fm.sigma_ = sigma;
    fm.seed_ = seed;
    Rng rng(seed);
    fm.weights_.resize(output_dim * input_dim);
    for (auto& w : fm.weights_) w = standard_normal(rng) / sigma;
    fm.offsets_.resize(output_dim);
    for (auto& b : fm.offsets_) b = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    return fm;
  }

  FeatureKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  double sigma() const noexcept { return sigma_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Vector operator()(std::span<const double> x) const {
    if (x.size() != input_dim_)
      throw DimensionError("feature map expects dimension " + std::to_string(input_dim_) + ", got " +
                           std::to_string(x.size()));
    if (kind_ == FeatureKind::identity) return Vector(x.begin(), x.end());
    Vector z(output_dim_);
    const double amp = std::sqrt(2.0 / static_cast<double>(output_dim_));
    for (std::size_t i = 0; i < output_dim_; ++i) {
      double a = offsets_[i];
      const double* row = weights_.data() + i * input_dim_;
      for (std::size_t j = 0; j < input_dim_; ++j) a += row[j] * x[j];
      z[i] = amp * std::cos(a);
    }
    return z;
  }

  bool operator==(const FeatureMap& o) const {
    return kind_ == o.kind_ && input_dim_ == o.input_dim_ && output_dim_ == o.output_dim_ && sigma_ == o.sigma_ &&
           seed_ == o.seed_;
  }

 private:
  FeatureKind kind_ = FeatureKind::identity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  double sigma_ = 1.0;
  std::uint64_t seed_ = 0;
  Vector weights_;  // row-major output_dim x input_dim
  Vector offsets_;
};

inline Vector featurize(const FeatureMap& fm, std::span<const double> x) { return fm(x); }

/// Value pair of the classifier f and the rejector r at one point.
struct Scores {
  double f = 0.0;
  double r = 0.0;
};

enum class Verdict { positive, negative, reject };

struct Decision {
  Verdict verdict = Verdict::reject;
  double f_value = 0.0;
  double r_value = 0.0;

  bool rejected() const noexcept { return verdict == Verdict::reject; }
  /// Label the classifier would assign, regardless of rejection; sign(0) = +1.
  Label label() const noexcept { return f_value >= 0.0 ? 1 : -1; }
};

/// Deployed decision rule: reject iff r <= 0, otherwise sign(f) with sign(0) = +1.
inline Decision decide_scores(Scores s) {
  Decision d{Verdict::reject, s.f, s.r};
  if (s.r > 0.0) d.verdict = s.f >= 0.0 ? Verdict::positive : Verdict::negative;
  return d;
}

/// Linear-in-features pair r(x) = <phi(x), theta> + bias_theta, f(x) = <phi(x), gamma> + bias_gamma.
/// The biases act as a constant feature that is never perturbed and never enters l1 penalties.
struct RejectionModel {
  Vector theta;
  Vector gamma;
  double bias_theta = 0.0;
  double bias_gamma = 0.0;
  FeatureMap feature_map;
  NormStats norm_stats;  // applied before the feature map; scheme none by default

  static RejectionModel zeros(FeatureMap fm) {
    RejectionModel m;
    m.theta.assign(fm.output_dim(), 0.0);
    m.gamma.assign(fm.output_dim(), 0.0);
    m.feature_map = std::move(fm);
    return m;
  }

  std::size_t input_dim() const noexcept { return feature_map.input_dim(); }
  std::size_t feature_dim() const noexcept { return feature_map.output_dim(); }

  /// Turns the rejector into the constant r = 1 so that rejection never fires.
  void disable_rejection() {
    std::fill(theta.begin(), theta.end(), 0.0);
    bias_theta = 1.0;
  }

  bool rejection_disabled() const noexcept {
    return bias_theta > 0.0 && std::all_of(theta.begin(), theta.end(), [](double v) { return v == 0.0; });
  }

  /// phi(normalize(x)): the space in which attacks and losses operate.
  Vector features(std::span<const double> x) const { return feature_map(norm_stats.apply(x)); }

  Scores scores_features(std::span<const double> z) const {
    if (z.size() != feature_dim())
      throw DimensionError("model expects feature dimension " + std::to_string(feature_dim()) + ", got " +
                           std::to_string(z.size()));
    return {dot(z, gamma) + bias_gamma, dot(z, theta) + bias_theta};
  }

  Scores scores(std::span<const double> x) const { return scores_features(features(x)); }

  void check() const {
    if (theta.size() != gamma.size() || theta.size() != feature_dim())
      throw DimensionError("theta, gamma and the feature map disagree on dimension");
    if (!all_finite(theta) || !all_finite(gamma) || !std::isfinite(bias_theta) || !std::isfinite(bias_gamma))
      throw NumericError("model parameters must be finite");
  }
};

inline Decision decide(const RejectionModel& m, std::span<const double> x) { return decide_scores(m.scores(x)); }

/// zeta(y) = theta / y - gamma, so that r - y f = y <z, zeta(y)> + y * zeta_bias(y).
inline Vector zeta(const RejectionModel& m, Label y) {
  if (y != 1 && y != -1) throw Error("zeta: label must be -1 or +1");
  Vector z(m.theta.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = m.theta[i] / y - m.gamma[i];
  return z;
}

inline double zeta_bias(const RejectionModel& m, Label y) { return m.bias_theta / y - m.bias_gamma; }

/// Featurizes every sample of a dataset through the model's normalization and feature map.
inline Dataset featurize(const RejectionModel& m, const Dataset& ds) {
  Dataset out{{}, m.feature_dim(), ds.name};
  out.samples.reserve(ds.size());
  for (const auto& s : ds.samples) out.samples.push_back({m.features(s.x), s.y});
  return out;
}

}  // namespace atro
