#pragma once

// Comparison solvers sharing the kernel-evaluation cost model:
// kernelized Pegasos (SGD on the regularized primal), stochastic dual
// coordinate ascent, and the online kernel Perceptron.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/kernels.hpp"
#include "sbp/loss.hpp"
#include "sbp/model.hpp"
#include "sbp/random.hpp"
#include "sbp/run_record.hpp"

namespace sbp {

namespace detail {

inline double mean_hinge_of_responses(std::span<const double> responses, double scale) {
  std::vector<double> margins(responses.size());
  for (std::size_t i = 0; i < margins.size(); ++i) margins[i] = responses[i] * scale;
  return losses_from_margins(margins).hinge;
}

inline void require_training_set(const Dataset& data, const char* who) {
  if (data.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
}

}  // namespace detail

// ---------------------------------------------------------------- Pegasos

struct PegasosConfig {
  double lambda = 1.0;
  std::uint64_t iterations = 1;
  std::uint64_t seed = 1;
  bool average = false;  ///< return the averaged iterate instead of the last one

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("pegasos: lambda must be > 0");
    if (iterations < 1) throw std::invalid_argument("pegasos: iterations must be >= 1");
  }
};

/// Step size of iteration t.
inline double pegasos_step_size(double lambda, std::uint64_t t) {
  return 1.0 / (lambda * static_cast<double>(t));
}

/// Kernelized Pegasos without projection. w is stored as scale * sum beta_j y_j Phi(x_j)
/// so the (1 - 1/t) shrink is O(1); responses are refreshed with one kernel
/// row on margin-violation steps only.
inline std::pair<TrainedModel, RunRecord> pegasos_train(const Dataset& data, const KernelOracle& kernel,
                                                        const PegasosConfig& config,
                                                        const MetricsOptions& metrics = {}) {
  config.validate();
  detail::require_training_set(data, "pegasos");
  const std::size_t n = data.size();
  const std::uint64_t start = kernel.evals();
  const std::vector<Label> y = data.labels();
  std::vector<double> beta(n, 0.0), raw(n, 0.0), row(n, 0.0);
  std::vector<double> alpha_sum, response_sum;
  if (config.average) {
    alpha_sum.assign(n, 0.0);
    response_sum.assign(n, 0.0);
  }
  double scale = 1.0;
  Rng rng(config.seed);
  MetricsRecorder rec(metrics, data, kernel.spec());
  rec.record().metadata["solver"] = "pegasos";
  rec.record().metadata["seed"] = std::to_string(config.seed);
  rec.record().metadata["lambda"] = format_double(config.lambda);
  rec.record().metadata["iterations"] = std::to_string(config.iterations);

  auto current_alpha = [&] {
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = scale * beta[j];
    return a;
  };
  auto snapshot = [&](std::uint64_t t, bool final_point) {
    std::vector<double> a(n);
    double hinge_value = 0.0;
    if (config.average) {
      const double inv_t = 1.0 / static_cast<double>(t);
      std::vector<double> c(n);
      for (std::size_t j = 0; j < n; ++j) {
        a[j] = alpha_sum[j] * inv_t;
        c[j] = response_sum[j] * inv_t;
      }
      hinge_value = detail::mean_hinge_of_responses(c, 1.0);
    } else {
      a = current_alpha();
      hinge_value = detail::mean_hinge_of_responses(raw, scale);
    }
    const std::uint64_t used = kernel.evals() - start;
    if (final_point) rec.finish(t, used, hinge_value, a, 0.0);
    else rec.sample(t, used, hinge_value, a, 0.0);
    return a;
  };

  for (std::uint64_t t = 1; t <= config.iterations; ++t) {
    const std::size_t i = uniform_index(rng, n);
    const bool violated = scale * raw[i] < 1.0;
    // w <- (1 - 1/t) w; at t = 1 this zeroes w, which is already zero.
    if (t > 1) scale *= 1.0 - 1.0 / static_cast<double>(t);
    if (violated) {
      const double step = pegasos_step_size(config.lambda, t) / scale;
      beta[i] += step;
      kernel.row(data.examples(), data[i], row);
      const double yi = y[i];
      for (std::size_t j = 0; j < n; ++j) raw[j] += step * yi * y[j] * row[j];
    }
    if (config.average) {
      for (std::size_t j = 0; j < n; ++j) {
        alpha_sum[j] += scale * beta[j];
        response_sum[j] += scale * raw[j];
      }
    }
    if (rec.due(kernel.evals() - start)) snapshot(t, false);
  }
  // snapshot() also returns the model coefficients; the recorder ignores it when disabled.
  const std::vector<double> final_alpha = snapshot(config.iterations, true);
  TrainedModel model = TrainedModel::from_dense("pegasos", data, final_alpha, kernel.spec(), false, 0.0,
                                                kernel.evals() - start);
  return {std::move(model), std::move(rec.record())};
}

// ---------------------------------------------------------------- SDCA

struct SdcaConfig {
  double lambda = 1.0;
  std::uint64_t iterations = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("sdca: lambda must be > 0");
    if (iterations < 1) throw std::invalid_argument("sdca: iterations must be >= 1");
  }
};

/// Exact maximizer over the box of the dual restricted to one coordinate:
/// the dual changes by delta (1 - c_i) - delta^2 K_ii / 2, where c_i is the
/// signed response y_i <w, Phi(x_i)>.
inline double sdca_coordinate_delta(double alpha_i, double response_i, double kii, double upper) {
  if (!(kii > 0.0)) return 0.0;
  return std::clamp((1.0 - response_i) / kii, -alpha_i, upper - alpha_i);
}

/// Dual state with w = sum alpha_i y_i Phi(x_i) and alpha in [0, 1/(lambda n)]^n.
struct SdcaState {
  std::vector<double> alpha;
  std::vector<double> responses;
  std::vector<double> diag;  ///< K(x_i, x_i)
  std::vector<Label> labels;
  std::vector<double> row;
  double lambda = 1.0;
  double upper = 1.0;
  std::uint64_t t = 0;
  std::uint64_t skipped = 0;  ///< zero-length or flat coordinates
};

/// Costs n kernel evaluations (the diagonal).
inline SdcaState sdca_init(const Dataset& data, const KernelOracle& kernel, double lambda) {
  detail::require_training_set(data, "sdca");
  if (!(lambda > 0.0)) throw std::invalid_argument("sdca: lambda must be > 0");
  const std::size_t n = data.size();
  SdcaState s;
  s.alpha.assign(n, 0.0);
  s.responses.assign(n, 0.0);
  s.row.assign(n, 0.0);
  s.labels = data.labels();
  s.diag.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.diag[i] = kernel(data[i], data[i]);
  s.lambda = lambda;
  s.upper = 1.0 / (lambda * static_cast<double>(n));
  return s;
}

/// Optimizes coordinate i. Costs n evaluations when alpha_i moves, none otherwise.
inline double sdca_update(SdcaState& s, const Dataset& data, const KernelOracle& kernel, std::size_t i) {
  s.t += 1;
  const double delta = sdca_coordinate_delta(s.alpha[i], s.responses[i], s.diag[i], s.upper);
  const double updated = std::clamp(s.alpha[i] + delta, 0.0, s.upper);
  const double applied = updated - s.alpha[i];
  if (applied == 0.0) {
    ++s.skipped;
    return 0.0;
  }
  s.alpha[i] = updated;
  kernel.row(data.examples(), data[i], s.row);
  const double yi = s.labels[i];
  for (std::size_t j = 0; j < s.responses.size(); ++j) s.responses[j] += applied * yi * s.labels[j] * s.row[j];
  return applied;
}

inline void sdca_step(SdcaState& s, const Dataset& data, const KernelOracle& kernel, Rng& rng) {
  sdca_update(s, data, kernel, uniform_index(rng, data.size()));
}

/// |w|^2 = sum alpha_i c_i.
inline double sdca_norm_sq(const SdcaState& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.alpha.size(); ++i) sum += s.alpha[i] * s.responses[i];
  return sum;
}

/// lambda (sum alpha - |w|^2 / 2): the dual scaled to match the primal below.
inline double sdca_dual(const SdcaState& s) {
  double sum = 0.0;
  for (double a : s.alpha) sum += a;
  return s.lambda * (sum - 0.5 * sdca_norm_sq(s));
}

/// lambda/2 |w|^2 + mean hinge.
inline double sdca_primal(const SdcaState& s) {
  return 0.5 * s.lambda * sdca_norm_sq(s) + detail::mean_hinge_of_responses(s.responses, 1.0);
}

inline std::pair<TrainedModel, RunRecord> sdca_train(const Dataset& data, const KernelOracle& kernel,
                                                     const SdcaConfig& config,
                                                     const MetricsOptions& metrics = {}) {
  config.validate();
  const std::uint64_t start = kernel.evals();
  SdcaState s = sdca_init(data, kernel, config.lambda);
  Rng rng(config.seed);
  MetricsRecorder rec(metrics, data, kernel.spec());
  rec.record().metadata["solver"] = "sdca";
  rec.record().metadata["seed"] = std::to_string(config.seed);
  rec.record().metadata["lambda"] = format_double(config.lambda);
  rec.record().metadata["iterations"] = std::to_string(config.iterations);
  for (std::uint64_t t = 1; t <= config.iterations; ++t) {
    sdca_step(s, data, kernel, rng);
    const std::uint64_t used = kernel.evals() - start;
    if (rec.due(used)) rec.sample(t, used, detail::mean_hinge_of_responses(s.responses, 1.0), s.alpha, 0.0);
  }
  const std::uint64_t used = kernel.evals() - start;
  rec.finish(config.iterations, used, detail::mean_hinge_of_responses(s.responses, 1.0), s.alpha, 0.0);
  TrainedModel model = TrainedModel::from_dense("sdca", data, s.alpha, kernel.spec(), false, 0.0, used);
  return {std::move(model), std::move(rec.record())};
}

// ---------------------------------------------------------------- Perceptron

struct PerceptronModel {
  std::vector<std::int64_t> counts;  ///< mistakes made on each training row
  std::uint64_t mistakes = 0;
  std::uint64_t passes = 1;
  bool beyond_single_pass = false;  ///< online-to-batch guarantees cover one pass only
  std::uint64_t kernel_evals = 0;

  std::size_t support_size() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c != 0; }));
  }

  TrainedModel to_model(const Dataset& train, const KernelSpec& kernel) const {
    std::vector<double> alpha(counts.begin(), counts.end());
    return TrainedModel::from_dense("perceptron", train, alpha, kernel, false, 0.0, kernel_evals);
  }
};

/// Mistake-driven online Perceptron; each pass visits the rows in a fresh
/// seeded permutation. Predicting a row costs one evaluation per current
/// support vector.
inline std::pair<PerceptronModel, RunRecord> perceptron_train(const Dataset& data, const KernelOracle& kernel,
                                                              std::uint64_t seed, std::uint64_t passes,
                                                              const MetricsOptions& metrics = {}) {
  detail::require_training_set(data, "perceptron");
  if (passes < 1) throw std::invalid_argument("perceptron: passes must be >= 1");
  const std::size_t n = data.size();
  const std::uint64_t start = kernel.evals();
  PerceptronModel model;
  model.counts.assign(n, 0);
  model.passes = passes;
  model.beyond_single_pass = passes > 1;
  std::vector<std::size_t> support;  // insertion order
  std::vector<std::size_t> order(n);
  Rng rng(seed);
  MetricsRecorder rec(metrics, data, kernel.spec());
  rec.record().metadata["solver"] = "perceptron";
  rec.record().metadata["seed"] = std::to_string(seed);
  rec.record().metadata["passes"] = std::to_string(passes);
  if (passes > 1) rec.record().metadata["beyond_single_pass"] = "1";

  auto dense = [&] { return std::vector<double>(model.counts.begin(), model.counts.end()); };
  std::uint64_t step = 0;
  for (std::uint64_t pass = 0; pass < passes; ++pass) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
    for (std::size_t i : order) {
      ++step;
      double score = 0.0;
      for (std::size_t j : support)
        score += static_cast<double>(model.counts[j]) * data.label(j) * kernel(data[j], data[i]);
      if (data.label(i) * score <= 0.0) {
        if (model.counts[i] == 0) support.push_back(i);
        model.counts[i] += 1;
        model.mistakes += 1;
      }
      const std::uint64_t used = kernel.evals() - start;
      if (rec.due(used)) {
        const auto a = dense();
        rec.sample(step, used, rec.train_hinge(a, 0.0), a, 0.0);
      }
    }
  }
  model.kernel_evals = kernel.evals() - start;
  if (metrics.enabled) {
    const auto a = dense();
    rec.finish(step, model.kernel_evals, rec.train_hinge(a, 0.0), a, 0.0);
  }
  return {std::move(model), std::move(rec.record())};
}

}  // namespace sbp
