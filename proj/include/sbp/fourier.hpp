#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sbp/example.hpp"
#include "sbp/random.hpp"

namespace sbp {

/// Random Fourier features for the Gaussian kernel exp(-|x - x'|^2 / (2 sigma2)):
///   P(x)_{2i}   = cos(<v_i, x> / sigma) / sqrt(k)
///   P(x)_{2i+1} = sin(<v_i, x> / sigma) / sqrt(k)
/// with v_i ~ N(0, I_d). Each feature pair costs one d-dimensional inner
/// product, which is what `inner_products()` counts.
class FourierMap {
 public:
  FourierMap(std::uint64_t seed, std::size_t pairs, std::size_t dimension, double sigma2)
      : pairs_(pairs), dimension_(dimension), sigma_(std::sqrt(sigma2)) {
    if (pairs == 0) throw std::invalid_argument("fourier: need at least one feature pair");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("fourier: sigma2 must be > 0");
    Rng rng(seed);
    directions_.resize(pairs * dimension);
    for (double& v : directions_) v = standard_normal(rng);
  }

  std::size_t pairs() const noexcept { return pairs_; }
  std::size_t input_dimension() const noexcept { return dimension_; }
  std::size_t output_dimension() const noexcept { return 2 * pairs_; }
  std::uint64_t inner_products() const noexcept { return inner_products_; }

  /// Features with ids >= input_dimension() are ignored.
  std::vector<double> features(const SparseExample& x) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(pairs_));
    std::vector<double> out(2 * pairs_);
    const auto idx = x.indices();
    const auto val = x.values();
    for (std::size_t i = 0; i < pairs_; ++i) {
      const double* v = directions_.data() + i * dimension_;
      double proj = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (idx[k] < dimension_) proj += v[idx[k]] * val[k];
      proj /= sigma_;
      out[2 * i] = norm * std::cos(proj);
      out[2 * i + 1] = norm * std::sin(proj);
    }
    inner_products_ += pairs_;
    return out;
  }

  /// Maps every row of `data`; costs pairs() * data.size() inner products.
  Dataset linearize(const Dataset& data) {
    Dataset out;
    for (const auto& x : data) out.push_back(SparseExample::from_dense(features(x), x.label()));
    return out;
  }

 private:
  std::size_t pairs_;
  std::size_t dimension_;
  double sigma_;
  std::vector<double> directions_;  ///< row-major, pairs x dimension
  std::uint64_t inner_products_ = 0;
};

inline std::vector<double> fourier_features(FourierMap& map, const SparseExample& x) { return map.features(x); }

}  // namespace sbp
