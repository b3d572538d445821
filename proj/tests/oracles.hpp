#pragma once

// Slow, obviously-correct reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "sbp/example.hpp"

namespace oracle {

/// Water level by sorting and scanning prefix sums.
inline double water_level(std::vector<double> c, double volume) {
  std::sort(c.begin(), c.end());
  double prefix = 0.0;
  for (std::size_t k = 1; k <= c.size(); ++k) {
    prefix += c[k - 1];
    const double level = (volume + prefix) / static_cast<double>(k);
    if (k == c.size() || level <= c[k]) return level;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Level at fixed bias b: example i sits at c_i + y_i b.
inline double water_level_at_bias(const std::vector<double>& c, const std::vector<int>& y, double volume,
                                  double b) {
  std::vector<double> shifted(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) shifted[i] = c[i] + y[i] * b;
  return water_level(std::move(shifted), volume);
}

/// max over an evenly spaced grid of b values in [lo, hi].
inline double best_level_on_grid(const std::vector<double>& c, const std::vector<int>& y, double volume,
                                 double lo, double hi, std::size_t points) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points; ++k) {
    const double b = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    best = std::max(best, water_level_at_bias(c, y, volume, b));
  }
  return best;
}

/// Maximizer of q(d) = d (1 - c) - d^2 K / 2 over [lo, hi] by comparing the
/// objective at the endpoints and at the stationary point when it is inside.
inline double box_quadratic_argmax(double c, double kii, double lo, double hi) {
  auto q = [&](double d) { return d * (1.0 - c) - 0.5 * d * d * kii; };
  std::vector<double> cand{lo, hi};
  const double stationary = (1.0 - c) / kii;
  if (stationary > lo && stationary < hi) cand.push_back(stationary);
  double best = cand[0];
  for (double d : cand)
    if (q(d) > q(best)) best = d;
  return best;
}

struct Dense2 {
  std::vector<double> x1, x2;
  std::vector<int> y;
};

inline Dense2 dense2(const sbp::Dataset& data) {
  Dense2 d;
  for (const auto& e : data) {
    double v[2] = {0.0, 0.0};
    for (std::size_t k = 0; k < e.nnz(); ++k)
      if (e.indices()[k] < 2) v[e.indices()[k]] = e.values()[k];
    d.x1.push_back(v[0]);
    d.x2.push_back(v[1]);
    d.y.push_back(e.label());
  }
  return d;
}

inline double mean_hinge_2d(const Dense2& d, double u1, double u2) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.y.size(); ++i) s += std::max(0.0, 1.0 - d.y[i] * (u1 * d.x1[i] + u2 * d.x2[i]));
  return s / static_cast<double>(d.y.size());
}

struct GridOptimum {
  double u1 = 0.0, u2 = 0.0;
  double norm = 0.0;
  double loss = 0.0;
  double objective = 0.0;
};

/// Minimizer of lambda/2 |u|^2 + mean hinge over 2-D linear predictors by
/// dense grid search, refined on successively finer grids around the best point.
inline GridOptimum regularized_grid_optimum(const Dense2& d, double lambda, double radius = 8.0,
                                            int points = 201, int refinements = 4) {
  GridOptimum best;
  best.objective = std::numeric_limits<double>::infinity();
  double c1 = 0.0, c2 = 0.0, half = radius;
  for (int level = 0; level <= refinements; ++level) {
    const double step = 2.0 * half / (points - 1);
    for (int a = 0; a < points; ++a) {
      for (int b = 0; b < points; ++b) {
        const double u1 = c1 - half + a * step, u2 = c2 - half + b * step;
        const double loss = mean_hinge_2d(d, u1, u2);
        const double obj = 0.5 * lambda * (u1 * u1 + u2 * u2) + loss;
        if (obj < best.objective) best = {u1, u2, std::hypot(u1, u2), loss, obj};
      }
    }
    c1 = best.u1;
    c2 = best.u2;
    half = 4.0 * step;
  }
  return best;
}

/// max over unit-norm 2-D directions of the level sum_i max(0, g - y_i <u, x_i>) = volume,
/// by scanning angles then refining.
inline double slack_objective_2d(const Dense2& d, double volume, int points = 3600, int refinements = 3) {
  auto level = [&](double theta) {
    std::vector<double> c(d.y.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = d.y[i] * (std::cos(theta) * d.x1[i] + std::sin(theta) * d.x2[i]);
    return water_level(std::move(c), volume);
  };
  const double pi = std::acos(-1.0);
  double best_theta = 0.0, best = -std::numeric_limits<double>::infinity();
  double lo = -pi, hi = pi;
  for (int r = 0; r <= refinements; ++r) {
    const double step = (hi - lo) / points;
    for (int k = 0; k <= points; ++k) {
      const double th = lo + k * step;
      const double v = level(th);
      if (v > best) {
        best = v;
        best_theta = th;
      }
    }
    lo = best_theta - 2 * step;
    hi = best_theta + 2 * step;
  }
  return best;
}

/// Responses y_i <w, Phi(x_i)> recomputed from scratch with double loops.
template <class Kernel>
std::vector<double> responses(const sbp::Dataset& data, const std::vector<double>& alpha, Kernel&& k) {
  const std::size_t n = data.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] != 0.0) c[i] += alpha[j] * data.label(i) * data.label(j) * k(data[i], data[j]);
  return c;
}

/// exp(-|a - b|^2 / (2 s2)) from dense coordinates.
inline double gaussian_dense(const std::vector<double>& a, const std::vector<double>& b, double s2) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-d / (2.0 * s2));
}

}  // namespace oracle
