#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sbp {

using FeatureId = std::uint32_t;
using Label = int;  // always -1 or +1

/// Labeled sparse feature vector. Feature ids are 0-based and strictly
/// ascending; zero values are never stored. The squared norm is computed
/// once at construction and is not a kernel evaluation.
class SparseExample {
 public:
  static constexpr std::size_t kNoId = std::numeric_limits<std::size_t>::max();

  SparseExample() = default;

  SparseExample(std::vector<FeatureId> indices, std::vector<double> values, Label label)
      : indices_(std::move(indices)), values_(std::move(values)), label_(label) {
    if (indices_.size() != values_.size())
      throw std::invalid_argument("SparseExample: index/value length mismatch");
    if (label_ != 1 && label_ != -1)
      throw std::invalid_argument("SparseExample: label must be -1 or +1");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (k > 0 && indices_[k] <= indices_[k - 1])
        throw std::invalid_argument("SparseExample: indices must be strictly ascending");
      if (values_[k] == 0.0)
        throw std::invalid_argument("SparseExample: stored zero value");
    }
    sq_norm_ = dot(*this, *this);
  }

  /// Builds from a dense vector, dropping exact zeros.
  static SparseExample from_dense(std::span<const double> dense, Label label) {
    std::vector<FeatureId> idx;
    std::vector<double> val;
    for (std::size_t k = 0; k < dense.size(); ++k) {
      if (dense[k] != 0.0) {
        idx.push_back(static_cast<FeatureId>(k));
        val.push_back(dense[k]);
      }
    }
    return SparseExample(std::move(idx), std::move(val), label);
  }

  std::span<const FeatureId> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }
  Label label() const noexcept { return label_; }
  double sq_norm() const noexcept { return sq_norm_; }
  std::size_t nnz() const noexcept { return indices_.size(); }

  /// Row position inside the owning dataset; used by precomputed Gram kernels.
  std::size_t id() const noexcept { return id_; }
  void set_id(std::size_t id) noexcept { id_ = id; }

  /// One past the largest feature id, 0 for the empty vector.
  std::size_t dimension() const noexcept {
    return indices_.empty() ? 0 : static_cast<std::size_t>(indices_.back()) + 1;
  }

  /// Sparse inner product, accumulated in ascending feature order.
  friend double dot(const SparseExample& a, const SparseExample& b) noexcept {
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.indices_.size() && j < b.indices_.size()) {
      if (a.indices_[i] == b.indices_[j]) {
        sum += a.values_[i++] * b.values_[j++];
      } else if (a.indices_[i] < b.indices_[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return sum;
  }

  friend bool operator==(const SparseExample& a, const SparseExample& b) {
    return a.label_ == b.label_ && a.indices_ == b.indices_ && a.values_ == b.values_;
  }

 private:
  std::vector<FeatureId> indices_;
  std::vector<double> values_;
  Label label_ = 1;
  double sq_norm_ = 0.0;
  std::size_t id_ = kNoId;
};

/// Ordered collection of examples. Row ids are assigned on insertion.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<SparseExample> examples) {
    for (auto& e : examples) push_back(std::move(e));
  }

  void push_back(SparseExample e) {
    e.set_id(examples_.size());
    dimension_ = std::max(dimension_, e.dimension());
    (e.label() > 0 ? positives_ : negatives_) += 1;
    examples_.push_back(std::move(e));
  }

  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t positives() const noexcept { return positives_; }
  std::size_t negatives() const noexcept { return negatives_; }
  bool has_both_classes() const noexcept { return positives_ > 0 && negatives_ > 0; }

  const SparseExample& operator[](std::size_t i) const { return examples_[i]; }
  std::span<const SparseExample> examples() const noexcept { return examples_; }
  auto begin() const noexcept { return examples_.begin(); }
  auto end() const noexcept { return examples_.end(); }

  Label label(std::size_t i) const { return examples_[i].label(); }
  std::vector<Label> labels() const {
    std::vector<Label> y;
    y.reserve(examples_.size());
    for (const auto& e : examples_) y.push_back(e.label());
    return y;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.examples_ == b.examples_; }

 private:
  std::vector<SparseExample> examples_;
  std::size_t dimension_ = 0;
  std::size_t positives_ = 0;
  std::size_t negatives_ = 0;
};

}  // namespace sbp
