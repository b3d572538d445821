#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace sbp {

inline double hinge(double margin) { return std::max(0.0, 1.0 - margin); }

/// Zero margins count as errors.
inline double zero_one(double margin) { return margin <= 0.0 ? 1.0 : 0.0; }

/// Fixed-order pairwise summation; the result depends only on the values
/// and their order, never on how work is scheduled.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct Losses {
  double hinge = 0.0;
  double zero_one = 0.0;
};

/// Mean hinge and 0/1 loss over a vector of signed margins y_i * score_i.
inline Losses losses_from_margins(std::span<const double> margins) {
  if (margins.empty()) return {};
  std::vector<double> h(margins.size()), z(margins.size());
  for (std::size_t i = 0; i < margins.size(); ++i) {
    h[i] = hinge(margins[i]);
    z[i] = zero_one(margins[i]);
  }
  const double n = static_cast<double>(margins.size());
  return {pairwise_sum(h) / n, pairwise_sum(z) / n};
}

}  // namespace sbp
