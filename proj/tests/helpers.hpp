#pragma once

#include <initializer_list>
#include <utility>
#include <vector>

#include "sbp/data.hpp"
#include "sbp/example.hpp"

namespace testing_util {

inline sbp::SparseExample dense(std::vector<double> x, sbp::Label y) { return sbp::SparseExample::from_dense(x, y); }

inline sbp::Dataset dataset(std::initializer_list<std::pair<std::vector<double>, sbp::Label>> rows) {
  sbp::Dataset d;
  for (const auto& [x, y] : rows) d.push_back(dense(x, y));
  return d;
}

inline sbp::Dataset synthetic(sbp::SyntheticKind kind, std::size_t n, std::size_t dim, std::uint64_t seed) {
  sbp::SyntheticSpec s;
  s.kind = kind;
  s.n = n;
  s.dimension = dim;
  s.seed = seed;
  return sbp::generate(s);
}

}  // namespace testing_util
