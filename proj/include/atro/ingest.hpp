#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atro/error.hpp"
#include "atro/linalg.hpp"
#include "atro/rng.hpp"

namespace atro {

/// Binary label, always -1 or +1.
using Label = int;

struct LabeledSample {
  Vector x;
  Label y = 1;

  bool operator==(const LabeledSample&) const = default;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::size_t d = 0;
  std::string name;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  bool operator==(const Dataset& o) const { return d == o.d && samples == o.samples; }
};

/// Checks the Dataset invariants: shared dimension, finite coordinates, labels in {-1,+1}.
inline void validate(const Dataset& ds) {
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    if (s.x.size() != ds.d)
      throw DimensionError("sample " + std::to_string(i) + " has dimension " + std::to_string(s.x.size()) +
                           ", dataset has " + std::to_string(ds.d));
    if (s.y != 1 && s.y != -1) throw Error("sample " + std::to_string(i) + " has label outside {-1,+1}");
    if (!all_finite(s.x)) throw NumericError("sample " + std::to_string(i) + " has a non-finite coordinate");
  }
}

/// Maps raw label tokens to {-1,+1}. Tokens are matched verbatim first, then by numeric value.
class LabelMap {
 public:
  /// Identity on {-1,+1}: accepts "1", "+1", "-1", "1.0", ...
  static LabelMap identity() {
    LabelMap m;
    m.by_value_[1.0] = 1;
    m.by_value_[-1.0] = -1;
    return m;
  }

  /// {0,1} -> {-1,+1}
  static LabelMap zero_one() {
    LabelMap m;
    m.by_value_[0.0] = -1;
    m.by_value_[1.0] = 1;
    return m;
  }

  LabelMap& map(const std::string& token, Label y) {
    check(y);
    by_token_[token] = y;
    if (auto v = parse_number(token)) by_value_[*v] = y;
    return *this;
  }

  std::optional<Label> lookup(std::string_view token) const {
    if (auto it = by_token_.find(std::string(token)); it != by_token_.end()) return it->second;
    if (auto v = parse_number(token)) {
      if (auto it = by_value_.find(*v); it != by_value_.end()) return it->second;
    }
    return std::nullopt;
  }

  const std::map<std::string, Label>& tokens() const noexcept { return by_token_; }
  const std::map<double, Label>& values() const noexcept { return by_value_; }

  static std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }

 private:
  static void check(Label y) {
    if (y != 1 && y != -1) throw Error("label map target must be -1 or +1");
  }

  std::map<std::string, Label> by_token_;
  std::map<double, Label> by_value_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(text.substr(start, end - start), line_no);
    if (end == text.size()) break;
    start = end + 1;
  }
}

inline double parse_real(std::string_view tok, std::size_t line) {
  auto v = LabelMap::parse_number(tok);
  if (!v) throw ParseError("non-numeric value '" + std::string(tok) + "'", line);
  if (!std::isfinite(*v)) throw ParseError("non-finite value '" + std::string(tok) + "'", line);
  return *v;
}

inline std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses LIBSVM/svmlight text: "<label> <idx>:<val> ..." with 1-based, strictly increasing indices.
/// The dimension is the larger of `min_dim` and the maximum index seen.
inline Dataset parse_libsvm(std::string_view text, const LabelMap& labels = LabelMap::identity(),
                            std::size_t min_dim = 0) {
  struct Row {
    std::vector<std::pair<std::size_t, double>> entries;
    Label y;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;

  detail::for_each_line(text, [&](std::string_view raw, std::size_t line) {
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = detail::trim(raw);
    if (raw.empty()) return;
    auto toks = detail::split_ws(raw);
    auto y = labels.lookup(toks[0]);
    if (!y) throw ParseError("unknown label '" + std::string(toks[0]) + "'", line);
    Row row{{}, *y};
    std::size_t prev = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      auto tok = toks[k];
      auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError("malformed feature '" + std::string(tok) + "'", line);
      std::size_t idx = 0;
      auto key = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size())
        throw ParseError("malformed feature index '" + std::string(key) + "'", line);
      if (idx == 0) throw ParseError("feature indices are 1-based", line);
      if (idx == prev) throw ParseError("duplicate index " + std::to_string(idx), line);
      if (idx < prev) throw ParseError("indices not increasing at " + std::to_string(idx), line);
      prev = idx;
      row.entries.emplace_back(idx, detail::parse_real(tok.substr(colon + 1), line));
    }
    max_index = std::max(max_index, prev);
    rows.push_back(std::move(row));
  });

  if (rows.empty()) throw ParseError("empty dataset");
  Dataset ds;
  ds.d = std::max(max_index, min_dim);
  ds.samples.reserve(rows.size());
  for (auto& row : rows) {
    LabeledSample s{Vector(ds.d, 0.0), row.y};
    for (auto [idx, v] : row.entries) s.x[idx - 1] = v;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Serializes to LIBSVM text; zero coordinates are omitted, values use shortest round-trip form.
inline std::string to_libsvm(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.samples) {
    out += s.y > 0 ? "+1" : "-1";
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (s.x[j] == 0.0) continue;
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += detail::format_real(s.x[j]);
    }
    out += '\n';
  }
  return out;
}

/// Parses comma-separated text with a header row; the last column is the label.
inline Dataset parse_csv(std::string_view text, const LabelMap& labels = LabelMap::identity()) {
  Dataset ds;
  std::size_t columns = 0;
  bool header_seen = false;
  detail::for_each_line(text, [&](std::string_view raw, std::size_t line) {
    raw = detail::trim(raw);
    if (raw.empty()) return;
    auto fields = detail::split_on(raw, ',');
    if (!header_seen) {
      header_seen = true;
      columns = fields.size();
      if (columns < 2) throw ParseError("header needs at least one feature and a label column", line);
      return;
    }
    if (fields.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()),
                       line);
    auto y = labels.lookup(fields.back());
    if (!y) throw ParseError("unknown label '" + std::string(fields.back()) + "'", line);
    LabeledSample s{Vector(columns - 1), *y};
    for (std::size_t j = 0; j + 1 < columns; ++j) s.x[j] = detail::parse_real(fields[j], line);
    ds.samples.push_back(std::move(s));
  });
  if (ds.samples.empty()) throw ParseError("empty dataset");
  ds.d = columns - 1;
  return ds;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads a dataset by extension: ".csv" is CSV, anything else LIBSVM.
inline Dataset load_dataset(const std::string& path, const LabelMap& labels = LabelMap::identity(),
                            std::size_t min_dim = 0) {
  auto text = read_text_file(path);
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  Dataset ds;
  try {
    ds = csv ? parse_csv(text, labels) : parse_libsvm(text, labels, min_dim);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (csv && ds.d < min_dim) {
    for (auto& s : ds.samples) s.x.resize(min_dim, 0.0);
    ds.d = min_dim;
  }
  auto slash = path.find_last_of('/');
  ds.name = slash == std::string::npos ? path : path.substr(slash + 1);
  return ds;
}

// ---------------------------------------------------------------------------
// Normalization

enum class NormScheme { none, minmax01, zscore };

inline const char* to_string(NormScheme s) {
  switch (s) {
    case NormScheme::none: return "none";
    case NormScheme::minmax01: return "minmax01";
    case NormScheme::zscore: return "zscore";
  }
  return "?";
}

inline NormScheme parse_norm_scheme(std::string_view s) {
  if (s == "none") return NormScheme::none;
  if (s == "minmax01") return NormScheme::minmax01;
  if (s == "zscore") return NormScheme::zscore;
  throw Error("unknown normalization scheme '" + std::string(s) + "'");
}

/// Per-dimension affine map x -> (x - shift) / scale. Constant dimensions map to 0.
struct NormStats {
  NormScheme scheme = NormScheme::none;
  Vector shift;  // min (minmax01) or mean (zscore)
  Vector scale;  // max - min, or std
  std::vector<bool> constant;

  Vector apply(std::span<const double> x) const {
    if (scheme == NormScheme::none) return Vector(x.begin(), x.end());
    if (x.size() != shift.size()) throw DimensionError("normalization stats dimension mismatch");
    Vector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = constant[j] ? 0.0 : (x[j] - shift[j]) / scale[j];
    return out;
  }

  Dataset apply(const Dataset& ds) const {
    Dataset out{{}, ds.d, ds.name};
    out.samples.reserve(ds.size());
    for (const auto& s : ds.samples) out.samples.push_back({apply(s.x), s.y});
    return out;
  }

  bool operator==(const NormStats&) const = default;
};

inline std::pair<Dataset, NormStats> normalize(const Dataset& ds, NormScheme scheme = NormScheme::minmax01) {
  if (ds.empty()) throw Error("normalize: empty dataset");
  NormStats st;
  st.scheme = scheme;
  if (scheme != NormScheme::none) {
    const std::size_t d = ds.d;
    st.shift.assign(d, 0.0);
    st.scale.assign(d, 1.0);
    st.constant.assign(d, false);
    for (std::size_t j = 0; j < d; ++j) {
      if (scheme == NormScheme::minmax01) {
        double lo = ds.samples[0].x[j], hi = lo;
        for (const auto& s : ds.samples) {
          lo = std::min(lo, s.x[j]);
          hi = std::max(hi, s.x[j]);
        }
        st.shift[j] = lo;
        st.scale[j] = hi - lo;
        st.constant[j] = !(hi > lo);
      } else {
        double mean = 0.0;
        for (const auto& s : ds.samples) mean += s.x[j];
        mean /= static_cast<double>(ds.size());
        double var = 0.0;
        for (const auto& s : ds.samples) var += (s.x[j] - mean) * (s.x[j] - mean);
        var /= static_cast<double>(ds.size());
        st.shift[j] = mean;
        st.scale[j] = std::sqrt(var);
        st.constant[j] = !(st.scale[j] > 0.0);
      }
      if (st.constant[j]) st.scale[j] = 1.0;
    }
  }
  return {st.apply(ds), std::move(st)};
}

// ---------------------------------------------------------------------------
// Subsetting and splitting

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> idx) {
  Dataset out{{}, ds.d, ds.name};
  out.samples.reserve(idx.size());
  for (auto i : idx) out.samples.push_back(ds.samples.at(i));
  return out;
}

/// Deterministic Fisher-Yates permutation of 0..n-1 (portable: no std distributions).
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

/// Shuffles under `seed` and takes the first `n_train` samples as the training side.
inline std::pair<Dataset, Dataset> split_count(const Dataset& ds, std::size_t n_train, std::uint64_t seed) {
  if (ds.size() < 2) throw Error("split: need at least 2 samples");
  if (n_train == 0 || n_train >= ds.size()) throw Error("split: one side would be empty");
  auto p = permutation(ds.size(), seed);
  std::span<const std::size_t> all(p);
  return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("split: fraction must lie in (0, 1)");
  if (ds.size() < 2) throw Error("split: need at least 2 samples");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  return split_count(ds, n_train, seed);
}

}  // namespace atro
