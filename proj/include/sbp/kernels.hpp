#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbp/example.hpp"
#include "sbp/format.hpp"

namespace sbp {

enum class KernelKind { Gaussian, Linear, PrecomputedGram };

/// Kernel description without any counting state. Gaussian kernels are
/// K(a,b) = exp(-|a-b|^2 / (2 sigma2)).
struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double sigma2 = 1.0;
  std::shared_ptr<const std::vector<double>> gram;  // row-major, gram_size^2
  std::size_t gram_size = 0;

  static KernelSpec gaussian(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw std::invalid_argument("gaussian kernel requires sigma2 > 0");
    return {KernelKind::Gaussian, sigma2, nullptr, 0};
  }
  static KernelSpec linear() { return {KernelKind::Linear, 1.0, nullptr, 0}; }
  static KernelSpec precomputed(std::vector<double> matrix, std::size_t n) {
    if (matrix.size() != n * n) throw std::invalid_argument("gram matrix must be n*n");
    return {KernelKind::PrecomputedGram, 1.0,
            std::make_shared<const std::vector<double>>(std::move(matrix)), n};
  }

  /// Parses "gaussian:SIGMA2" or "linear".
  static KernelSpec parse(std::string_view text) {
    if (text == "linear") return linear();
    constexpr std::string_view prefix = "gaussian:";
    if (text.starts_with(prefix)) {
      auto s2 = parse_double(text.substr(prefix.size()));
      if (!s2) throw std::invalid_argument("bad gaussian bandwidth in '" + std::string(text) + "'");
      return gaussian(*s2);
    }
    throw std::invalid_argument("unknown kernel '" + std::string(text) + "'");
  }

  std::string describe() const {
    switch (kind) {
      case KernelKind::Gaussian: return "gaussian:" + format_double(sigma2);
      case KernelKind::Linear: return "linear";
      case KernelKind::PrecomputedGram: return "gram:" + std::to_string(gram_size);
    }
    return "unknown";
  }
};

/// Kernel function with a monotone evaluation counter, the cost unit for
/// every solver in this library. Copies carry the count at copy time.
class KernelOracle {
 public:
  explicit KernelOracle(KernelSpec spec) : spec_(std::move(spec)) {}
  KernelOracle(const KernelOracle& other) : spec_(other.spec_), evals_(other.evals()) {}
  KernelOracle& operator=(const KernelOracle& other) {
    spec_ = other.spec_;
    evals_.store(other.evals(), std::memory_order_relaxed);
    return *this;
  }

  /// Same kernel, counter at zero.
  KernelOracle fresh() const { return KernelOracle(spec_); }

  const KernelSpec& spec() const noexcept { return spec_; }
  KernelKind kind() const noexcept { return spec_.kind; }
  std::uint64_t evals() const noexcept { return evals_.load(std::memory_order_relaxed); }

  /// One counted evaluation.
  double operator()(const SparseExample& a, const SparseExample& b) const {
    const double v = compute(a, b);
    evals_.fetch_add(1, std::memory_order_relaxed);
    return v;
  }

  /// out[i] = K(xs[i], xj) for all i; counts exactly xs.size() evaluations.
  void row(std::span<const SparseExample> xs, const SparseExample& xj, std::span<double> out) const {
    if (out.size() != xs.size()) throw std::invalid_argument("kernel row: output size mismatch");
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = compute(xs[i], xj);
    evals_.fetch_add(xs.size(), std::memory_order_relaxed);
  }

  std::vector<double> row(const Dataset& data, std::size_t j) const {
    if (j >= data.size()) throw std::out_of_range("kernel row: index out of range");
    std::vector<double> out(data.size());
    row(data.examples(), data[j], out);
    return out;
  }

  /// Uncounted evaluation, for oracles and diagnostics in tests only.
  double compute(const SparseExample& a, const SparseExample& b) const {
    switch (spec_.kind) {
      case KernelKind::Gaussian: {
        const double dist2 = std::max(0.0, a.sq_norm() + b.sq_norm() - 2.0 * dot(a, b));
        return std::exp(-dist2 / (2.0 * spec_.sigma2));
      }
      case KernelKind::Linear:
        return dot(a, b);
      case KernelKind::PrecomputedGram: {
        if (a.id() >= spec_.gram_size || b.id() >= spec_.gram_size)
          throw std::out_of_range("gram kernel: example id outside the precomputed matrix");
        return (*spec_.gram)[a.id() * spec_.gram_size + b.id()];
      }
    }
    return 0.0;
  }

 private:
  KernelSpec spec_;
  mutable std::atomic<std::uint64_t> evals_{0};
};

inline double kernel_eval(const KernelOracle& k, const SparseExample& a, const SparseExample& b) {
  return k(a, b);
}

inline std::vector<double> kernel_row(const KernelOracle& k, const Dataset& data, std::size_t j) {
  return k.row(data, j);
}

}  // namespace sbp
