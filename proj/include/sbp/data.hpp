#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sbp/error.hpp"
#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/kernels.hpp"
#include "sbp/loss.hpp"
#include "sbp/model.hpp"
#include "sbp/random.hpp"

namespace sbp {

// ---------------------------------------------------------------- LIBSVM text

struct ParseOptions {
  /// One-vs-rest: rows with this label become +1, all others -1. Without it
  /// only binary encodings (+1/-1 or 1/0) are accepted.
  std::optional<double> positive_class;
};

/// Reads `label idx:val idx:val ...` lines. Feature ids are 1-based in the
/// text and 0-based in memory. Blank lines and '#' comments are skipped;
/// CRLF endings are accepted.
inline Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {}) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  std::set<double> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;

    auto raw = parse_double(token);
    if (!raw) throw ParseError(line_no, "bad label '" + token + "'");
    Label label;
    if (options.positive_class) {
      label = *raw == *options.positive_class ? 1 : -1;
    } else if (*raw == 1.0) {
      label = 1;
    } else if (*raw == -1.0 || *raw == 0.0) {
      label = -1;
    } else {
      throw ParseError(line_no, "unknown label '" + token + "' (multi-class data needs a positive class)");
    }
    raw_labels.insert(*raw);
    if (!options.positive_class && raw_labels.count(0.0) && raw_labels.count(-1.0))
      throw ParseError(line_no, "labels 0 and -1 both present: multi-class data needs a positive class");

    std::vector<FeatureId> idx;
    std::vector<double> val;
    long long previous = 0;
    while (ls >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected idx:val, got '" + token + "'");
      auto id = parse_integer<long long>(std::string_view(token).substr(0, colon));
      auto v = parse_double(std::string_view(token).substr(colon + 1));
      if (!id || *id < 1 || *id > 0xFFFFFFFFll) throw ParseError(line_no, "bad feature index in '" + token + "'");
      if (!v || !std::isfinite(*v)) throw ParseError(line_no, "bad feature value in '" + token + "'");
      if (*id <= previous) throw ParseError(line_no, "feature indices must be strictly ascending");
      previous = *id;
      if (*v == 0.0) continue;
      idx.push_back(static_cast<FeatureId>(*id - 1));
      val.push_back(*v);
    }
    data.push_back(SparseExample(std::move(idx), std::move(val), label));
  }
  return data;
}

inline Dataset parse_libsvm_string(const std::string& text, const ParseOptions& options = {}) {
  std::istringstream is(text);
  return parse_libsvm(is, options);
}

inline Dataset load_libsvm(const std::string& path, const ParseOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_libsvm(in, options);
}

inline void write_libsvm(std::ostream& out, const Dataset& data) {
  for (const auto& x : data) {
    out << (x.label() > 0 ? "+1" : "-1");
    const auto idx = x.indices();
    const auto val = x.values();
    for (std::size_t k = 0; k < idx.size(); ++k) out << ' ' << (idx[k] + 1) << ':' << format_double(val[k]);
    out << '\n';
  }
}

inline std::string libsvm_string(const Dataset& data) {
  std::ostringstream os;
  write_libsvm(os, data);
  return os.str();
}

// ---------------------------------------------------------------- synthetic data

enum class SyntheticKind { TwoGaussians, XorRing, MarginSeparable };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::TwoGaussians;
  std::size_t n = 100;
  std::size_t dimension = 2;
  std::uint64_t seed = 1;
  double separation = 2.0;  ///< two_gaussians: distance between the class means
  double noise_rate = 0.0;  ///< two_gaussians, xor_ring: label flip probability
  double margin = 0.5;      ///< margin_separable
  double radius = 1.0;      ///< margin_separable

  static SyntheticKind parse_kind(std::string_view text) {
    if (text == "two_gaussians") return SyntheticKind::TwoGaussians;
    if (text == "xor_ring") return SyntheticKind::XorRing;
    if (text == "margin_separable") return SyntheticKind::MarginSeparable;
    throw std::invalid_argument("unknown synthetic kind '" + std::string(text) + "'");
  }
};

namespace detail {

inline Label flip(Label y, double rate, Rng& rng) {
  return rate > 0.0 && uniform_unit(rng) < rate ? -y : y;
}

}  // namespace detail

/// Seed-deterministic synthetic datasets.
///
/// two_gaussians: unit-variance clouds centred at +-(separation/2) e_1, each
///   point redrawn until it lies on its own class's side of x_1 = 0, so with
///   noise_rate 0 the classes are perfectly separable (Bayes error 0); labels
///   are then flipped with probability noise_rate.
/// xor_ring: uniform on [-1,1]^d, label +1 iff (x_1 x_2 > 0) differs from
///   (x_1^2 + x_2^2 > 0.5), then noise flips.
/// margin_separable: uniform in the radius ball with |x_1| >= margin and
///   label sign(x_1). The first two rows are +-margin e_1, so the best
///   unit-norm linear separator through the origin has margin exactly `margin`.
inline Dataset generate(const SyntheticSpec& spec) {
  if (spec.n < 1) throw DataError("synthetic: n must be >= 1");
  if (spec.dimension < 1) throw DataError("synthetic: dimension must be >= 1");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) throw DataError("synthetic: noise_rate must be in [0, 1)");
  Rng rng(spec.seed);
  Dataset data;
  std::vector<double> x(spec.dimension);
  switch (spec.kind) {
    case SyntheticKind::TwoGaussians: {
      if (!(spec.separation > 0.0)) throw DataError("two_gaussians: separation must be > 0");
      for (std::size_t i = 0; i < spec.n; ++i) {
        const Label y = fair_coin(rng) ? 1 : -1;
        do {
          for (double& v : x) v = standard_normal(rng);
          x[0] += 0.5 * spec.separation * y;
        } while (!(y * x[0] > 0.0));
        data.push_back(SparseExample::from_dense(x, detail::flip(y, spec.noise_rate, rng)));
      }
      break;
    }
    case SyntheticKind::XorRing: {
      if (spec.dimension < 2) throw DataError("xor_ring: dimension must be >= 2");
      for (std::size_t i = 0; i < spec.n; ++i) {
        for (double& v : x) v = 2.0 * uniform_unit(rng) - 1.0;
        const bool quadrant = x[0] * x[1] > 0.0;
        const bool outside = x[0] * x[0] + x[1] * x[1] > 0.5;
        const Label y = quadrant != outside ? 1 : -1;
        data.push_back(SparseExample::from_dense(x, detail::flip(y, spec.noise_rate, rng)));
      }
      break;
    }
    case SyntheticKind::MarginSeparable: {
      if (!(spec.margin > 0.0)) throw DataError("margin_separable: margin must be > 0");
      if (!(spec.radius > spec.margin)) throw DataError("margin_separable: radius must exceed margin");
      if (spec.n < 2) throw DataError("margin_separable: n must be >= 2");
      std::fill(x.begin(), x.end(), 0.0);
      x[0] = spec.margin;
      data.push_back(SparseExample::from_dense(x, 1));
      x[0] = -spec.margin;
      data.push_back(SparseExample::from_dense(x, -1));
      const double d = static_cast<double>(spec.dimension);
      while (data.size() < spec.n) {
        double norm_sq = 0.0;
        for (double& v : x) {
          v = standard_normal(rng);
          norm_sq += v * v;
        }
        if (norm_sq == 0.0) continue;
        const double r = spec.radius * std::pow(uniform_unit(rng), 1.0 / d) / std::sqrt(norm_sq);
        for (double& v : x) v *= r;
        if (std::abs(x[0]) < spec.margin) continue;
        data.push_back(SparseExample::from_dense(x, x[0] > 0.0 ? 1 : -1));
      }
      for (const auto& e : data) {
        double first = 0.0;
        if (!e.indices().empty() && e.indices()[0] == 0) first = e.values()[0];
        if (e.label() * first < spec.margin || std::sqrt(e.sq_norm()) > spec.radius * (1 + 1e-12))
          throw DataError("margin_separable: construction failed verification");
      }
      break;
    }
  }
  return data;
}

// ---------------------------------------------------------------- preprocessing

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  ///< 1 / stddev, 1 for constant features
};

/// Per-feature mean/stddev of a training set. Off by default in every tool.
inline Standardization fit_standardization(const Dataset& data) {
  const std::size_t d = data.dimension();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (data.empty()) return s;
  std::vector<double> sq(d, 0.0);
  for (const auto& x : data) {
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      s.mean[x.indices()[k]] += x.values()[k];
      sq[x.indices()[k]] += x.values()[k] * x.values()[k];
    }
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < d; ++j) {
    s.mean[j] /= n;
    const double var = sq[j] / n - s.mean[j] * s.mean[j];
    s.scale[j] = var > 1e-300 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

inline Dataset apply_standardization(const Dataset& data, const Standardization& s) {
  Dataset out;
  const std::size_t d = s.mean.size();
  for (const auto& x : data) {
    std::vector<double> dense(std::max(d, x.dimension()), 0.0);
    for (std::size_t j = 0; j < d; ++j) dense[j] = -s.mean[j] * s.scale[j];
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      const auto j = x.indices()[k];
      dense[j] = j < d ? (x.values()[k] - s.mean[j]) * s.scale[j] : x.values()[k];
    }
    out.push_back(SparseExample::from_dense(dense, x.label()));
  }
  return out;
}

/// Deterministic shuffled split; the last `fraction` of rows go to the test set.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split: fraction must be in (0, 1)");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
  const auto test_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
  Dataset train, test;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const SparseExample& e = data[order[k]];
    SparseExample copy(std::vector<FeatureId>(e.indices().begin(), e.indices().end()),
                       std::vector<double>(e.values().begin(), e.values().end()), e.label());
    (k + test_n < order.size() ? train : test).push_back(std::move(copy));
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------- evaluation

/// Mean hinge and 0/1 loss of `model` on `data`; costs
/// support_size * |data| evaluations on `kernel`, which should be an
/// evaluation counter separate from the training one.
inline Losses evaluate(const TrainedModel& model, const Dataset& train, const Dataset& data,
                       const KernelOracle& kernel) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<double> margins(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) margins[i] = data.label(i) * predict(model, train, data[i], kernel);
  return losses_from_margins(margins);
}

}  // namespace sbp
