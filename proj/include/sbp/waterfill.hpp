#pragma once

// Water level of a response vector: the gamma solving
//   sum_i max(0, gamma - c_i) = volume,
// i.e. the common surface reached when `volume` units of slack are poured
// into a basin whose floor heights are the responses c_i. gamma is also the
// value of the max-min slack objective at fixed w, and the indices under
// water carry the minimax-optimal sampling distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sbp/example.hpp"
#include "sbp/random.hpp"

namespace sbp {

enum class PivotRule {
  Randomized,       ///< expected O(n); pivots from a fixed-seed stream, so results are reproducible
  MedianOfMedians,  ///< worst-case O(n)
};

struct WaterLevel {
  double gamma = 0.0;
  std::size_t covered_count = 0;  ///< responses strictly below gamma (argmin set when volume is 0)
  double covered_sum = 0.0;       ///< sum of the covered responses
};

struct WaterLevelBias {
  double gamma = 0.0;
  double bias = 0.0;
  std::size_t covered_positive = 0;
  std::size_t covered_negative = 0;
};

/// Equality tolerance used for ties at the water level.
inline double level_tolerance(double gamma) { return 1e-12 * std::max(1.0, std::abs(gamma)); }

namespace detail {

/// Three-way partition of v around `pivot`: [< pivot][== pivot][> pivot].
/// Returns the two boundaries and the sum of the "<" block.
struct Partition {
  std::size_t less_end;
  std::size_t equal_end;
  double less_sum;
};

inline Partition partition3(std::span<double> v, double pivot) {
  std::size_t lt = 0, i = 0, gt = v.size();
  double less_sum = 0.0;
  while (i < gt) {
    if (v[i] < pivot) {
      less_sum += v[i];
      std::swap(v[lt++], v[i++]);
    } else if (v[i] > pivot) {
      std::swap(v[i], v[--gt]);
    } else {
      ++i;
    }
  }
  return {lt, gt, less_sum};
}

inline double median_of_small(std::span<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

/// k-th smallest value of v (reorders v). Blum-Floyd-Pratt-Rivest-Tarjan
/// selection, linear in the worst case.
inline double mom_select(std::span<double> v, std::size_t k);

/// Median of the medians of groups of five: splits v at least 30/70.
inline double mom_pivot(std::span<double> v) {
  if (v.size() <= 5) {
    std::vector<double> tmp(v.begin(), v.end());
    return median_of_small(tmp);
  }
  std::vector<double> medians;
  medians.reserve(v.size() / 5 + 1);
  for (std::size_t g = 0; g < v.size(); g += 5) {
    const std::size_t len = std::min<std::size_t>(5, v.size() - g);
    medians.push_back(median_of_small(v.subspan(g, len)));
  }
  return mom_select(medians, (medians.size() - 1) / 2);
}

inline double mom_select(std::span<double> v, std::size_t k) {
  while (true) {
    if (v.size() <= 5) {
      std::sort(v.begin(), v.end());
      return v[k];
    }
    const double pivot = mom_pivot(v);
    const Partition p = partition3(v, pivot);
    if (k < p.less_end) {
      v = v.first(p.less_end);
    } else if (k < p.equal_end) {
      return pivot;
    } else {
      k -= p.equal_end;
      v = v.subspan(p.equal_end);
    }
  }
}

inline constexpr std::uint64_t kPivotSeed = 0x5bd1e995u;
inline constexpr std::size_t kSampleThreshold = 4096;

struct Bracket {
  std::size_t below_count;
  double below_sum;
};

/// Estimates the level from a random sample of about n^(2/3) responses and
/// brackets it between two sample order statistics. One read pass over c
/// then settles everything outside the bracket; the band inside is copied
/// to `band`. Returns nullopt (band contents unspecified) when the exact
/// check shows the level is not inside the bracket.
inline std::optional<Bracket> sample_bracket(std::span<const double> c, double volume, Rng& rng,
                                             std::vector<double>& band) {
  const std::size_t n = c.size();
  const auto m = static_cast<std::size_t>(std::cbrt(static_cast<double>(n) * static_cast<double>(n)));
  std::vector<double> sample(m);
  for (auto& v : sample) v = c[uniform_index(rng, n)];
  std::sort(sample.begin(), sample.end());

  // Sample water level with the volume scaled down to the sample size.
  const double scaled = volume * static_cast<double>(m) / static_cast<double>(n);
  double prefix = 0.0;
  std::size_t rank = m;
  for (std::size_t k = 1; k <= m; ++k) {
    prefix += sample[k - 1];
    if (k == m || (scaled + prefix) / static_cast<double>(k) <= sample[k]) {
      rank = k;
      break;
    }
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto spread = static_cast<std::size_t>(std::ceil(2.5 * std::sqrt(static_cast<double>(m))));
  const double lo = rank > spread ? sample[rank - spread] : -inf;
  const double hi = rank + spread < m ? sample[rank + spread] : inf;

  band.clear();
  std::size_t below = 0;
  double below_sum = 0.0, band_sum = 0.0;
  for (double v : c) {
    if (v < lo) {
      ++below;
      below_sum += v;
    } else if (v <= hi) {
      band.push_back(v);
      band_sum += v;
    }
  }
  // Exact check that lo < gamma <= hi.
  const double at_lo = below == 0 ? 0.0 : static_cast<double>(below) * lo - below_sum;
  if (at_lo >= volume) return std::nullopt;
  if (hi != inf) {
    const double at_hi = static_cast<double>(below + band.size()) * hi - (below_sum + band_sum);
    if (at_hi < volume) return std::nullopt;
  }
  return Bracket{below, below_sum};
}

}  // namespace detail

/// Water level with a caller-provided scratch buffer (resized as needed),
/// so repeated calls in a training loop do not allocate.
inline WaterLevel find_gamma(std::span<const double> c, double volume, std::vector<double>& scratch,
                             PivotRule rule = PivotRule::Randomized) {
  if (c.empty()) throw std::invalid_argument("find_gamma: empty response vector");
  if (!(volume >= 0.0)) throw std::invalid_argument("find_gamma: volume must be non-negative");

  if (volume == 0.0) {
    const double lowest = *std::min_element(c.begin(), c.end());
    const double tol = level_tolerance(lowest);
    WaterLevel level{lowest, 0, 0.0};
    for (double ci : c) {
      if (ci <= lowest + tol) {
        ++level.covered_count;
        level.covered_sum += ci;
      }
    }
    return level;
  }

  Rng rng(detail::kPivotSeed);

  // Everything already known to lie under water: count and sum.
  std::size_t below_count = 0;
  double below_sum = 0.0;

  if (rule == PivotRule::Randomized && c.size() >= detail::kSampleThreshold) {
    if (auto band = detail::sample_bracket(c, volume, rng, scratch)) {
      below_count = band->below_count;
      below_sum = band->below_sum;
    } else {
      scratch.assign(c.begin(), c.end());
    }
  } else {
    scratch.assign(c.begin(), c.end());
  }
  std::span<double> live(scratch);

  while (!live.empty()) {
    const double pivot = rule == PivotRule::Randomized
                             ? live[uniform_index(rng, live.size())]
                             : detail::mom_pivot(live);
    const detail::Partition p = detail::partition3(live, pivot);
    const std::size_t count_to_pivot = below_count + p.less_end;
    const double needed = static_cast<double>(count_to_pivot) * pivot - (below_sum + p.less_sum);
    if (needed >= volume) {
      // Level at or below the pivot: nothing >= pivot is covered.
      live = live.first(p.less_end);
    } else {
      const std::size_t equal = p.equal_end - p.less_end;
      below_count = count_to_pivot + equal;
      below_sum += p.less_sum + static_cast<double>(equal) * pivot;
      live = live.subspan(p.equal_end);
    }
  }
  // volume > 0 guarantees at least the minimum was covered.
  return {(volume + below_sum) / static_cast<double>(below_count), below_count, below_sum};
}

inline WaterLevel find_gamma(std::span<const double> c, double volume,
                             PivotRule rule = PivotRule::Randomized) {
  std::vector<double> scratch;
  return find_gamma(c, volume, scratch, rule);
}

/// Value of the slack-constrained max-min objective at fixed responses.
inline double objective_value(std::span<const double> c, double volume) {
  return find_gamma(c, volume).gamma;
}

/// Indices carrying the sampling distribution: strictly under water when
/// that set is nonempty, otherwise those at the level (the separable case).
inline void support_set(std::span<const double> c, double gamma, double tol,
                        std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] < gamma - tol) out.push_back(j);
  if (!out.empty()) return;
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] <= gamma + tol) out.push_back(j);
  if (out.empty()) {
    // Only reachable if gamma was not produced from c; fall back to the argmin.
    out.push_back(static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin()));
  }
}

inline std::vector<std::size_t> support_set(std::span<const double> c, const WaterLevel& level,
                                            double tol) {
  std::vector<std::size_t> out;
  support_set(c, level.gamma, tol, out);
  return out;
}

inline std::vector<std::size_t> support_set(std::span<const double> c, const WaterLevel& level) {
  return support_set(c, level, level_tolerance(level.gamma));
}

/// Water level and bias maximizing the level over all b, where example i
/// sits at height c_i + y_i b.
///
/// Writing s = gamma - b and u = gamma + b, the positive basin is filled to
/// s and the negative one to u, and we maximize s + u subject to
///   sum_{+} max(0, s - c_i) + sum_{-} max(0, u - c_i) <= volume.
/// The minimal cost of reaching s + u = t is sum_j max(0, t - e_j) where
/// e_j is the sum of the j-th smallest positive and j-th smallest negative
/// response, so the optimum covers equally many points in each basin and
/// t* is an ordinary water level over the e_j. The search over j below uses
/// nth_element on both classes at once, expected O(n).
inline WaterLevelBias find_gamma_and_bias(std::span<const double> c, std::span<const Label> y,
                                          double volume) {
  if (c.size() != y.size()) throw std::invalid_argument("find_gamma_and_bias: size mismatch");
  if (!(volume >= 0.0)) throw std::invalid_argument("find_gamma_and_bias: volume must be non-negative");
  std::vector<double> pos, neg;
  pos.reserve(c.size());
  neg.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) (y[i] > 0 ? pos : neg).push_back(c[i]);
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("find_gamma_and_bias: both classes required (bias is unbounded)");

  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t max_rank = std::min(pos.size(), neg.size());

  // Invariant: pos[0..lo) and neg[0..lo) hold the lo smallest of each class,
  // and every pair rank below lo is strictly under the level.
  std::size_t lo = 0, hi = max_rank, hi_pos = pos.size(), hi_neg = neg.size();
  double sum_pos = 0.0, sum_neg = 0.0;
  double max_pos = -inf, max_neg = -inf;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(pos.begin() + lo, pos.begin() + mid, pos.begin() + hi_pos);
    std::nth_element(neg.begin() + lo, neg.begin() + mid, neg.begin() + hi_neg);
    double block_pos = 0.0, block_neg = 0.0;
    for (std::size_t k = lo; k < mid; ++k) block_pos += pos[k];
    for (std::size_t k = lo; k < mid; ++k) block_neg += neg[k];
    const double pair = pos[mid] + neg[mid];
    const double needed =
        static_cast<double>(mid) * pair - ((sum_pos + block_pos) + (sum_neg + block_neg));
    if (needed < volume) {
      sum_pos += block_pos + pos[mid];
      sum_neg += block_neg + neg[mid];
      max_pos = pos[mid];
      max_neg = neg[mid];
      lo = mid + 1;
    } else {
      hi = hi_pos = hi_neg = mid;
    }
  }

  const std::size_t covered = lo;
  const double next_pos = covered < pos.size() ? *std::min_element(pos.begin() + covered, pos.end()) : inf;
  const double next_neg = covered < neg.size() ? *std::min_element(neg.begin() + covered, neg.end()) : inf;
  const double total =
      covered == 0 ? next_pos + next_neg
                   : (volume + (sum_pos + sum_neg)) / static_cast<double>(covered);

  // Any split s + u = total within the current breakpoints is optimal;
  // take the middle of the admissible range of s.
  const double s_lo = std::max(max_pos, total - next_neg);
  const double s_hi = std::min(next_pos, total - max_neg);
  const double s = s_lo <= s_hi ? 0.5 * (s_lo + s_hi) : s_lo;
  const double gamma = 0.5 * total;
  return {gamma, gamma - s, covered, covered};
}

}  // namespace sbp
