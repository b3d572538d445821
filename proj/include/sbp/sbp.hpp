#pragma once

// Stochastic Batch Perceptron: stochastic supergradient ascent on the
// slack-constrained objective
//   f(w) = max_{xi >= 0, sum xi <= n nu} min_i (y_i <w, Phi(x_i)> + xi_i),   |w| <= 1,
// with w = sum_i alpha_i y_i Phi(x_i). Each step samples a point from the
// water-covered set, adds it with step eta0 / sqrt(t), updates all cached
// responses with one kernel row and projects back onto the unit ball. The
// averaged iterate is rescaled by its objective value on return.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbp/error.hpp"
#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/kernels.hpp"
#include "sbp/loss.hpp"
#include "sbp/model.hpp"
#include "sbp/random.hpp"
#include "sbp/run_record.hpp"
#include "sbp/waterfill.hpp"

namespace sbp {

struct SbpConfig {
  double nu = 0.0;                  ///< slack budget per example
  std::uint64_t iterations = 1;
  std::uint64_t seed = 1;
  bool use_bias = false;
  std::optional<double> eta0_override;
  std::uint64_t norm_recompute_period = 1000;  ///< 0 disables exact recomputation of |w|^2
  PivotRule pivot = PivotRule::Randomized;

  void validate() const {
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("sbp: nu must be >= 0");
    if (iterations < 1) throw std::invalid_argument("sbp: iterations must be >= 1");
    if (eta0_override && !(*eta0_override > 0.0)) throw std::invalid_argument("sbp: eta0 must be > 0");
  }
};

struct SbpState {
  std::vector<double> alpha;
  std::vector<double> responses;  ///< c_i = y_i <w, Phi(x_i)>, without bias
  double norm_sq = 0.0;           ///< tracked |w|^2
  std::vector<double> alpha_sum;
  std::vector<double> response_sum;
  std::uint64_t t = 0;
  double bias = 0.0;
  double eta0 = 1.0;
  double gamma = 0.0;  ///< water level found at the start of the last step
  std::size_t last_index = 0;

  // workspace
  std::vector<double> row;
  std::vector<double> scratch;
  std::vector<double> shifted;
  std::vector<std::size_t> candidates;
  std::vector<Label> labels;
};

inline SbpState sbp_init(const Dataset& data, const KernelOracle& kernel, const SbpConfig& config) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("sbp: empty dataset");
  if (config.use_bias && !data.has_both_classes())
    throw std::invalid_argument("sbp: bias mode requires both classes");
  const std::size_t n = data.size();
  SbpState s;
  s.alpha.assign(n, 0.0);
  s.responses.assign(n, 0.0);
  s.alpha_sum.assign(n, 0.0);
  s.response_sum.assign(n, 0.0);
  s.row.assign(n, 0.0);
  s.labels = data.labels();
  if (config.eta0_override) {
    s.eta0 = *config.eta0_override;
  } else {
    double max_self = 0.0;
    for (const auto& x : data) max_self = std::max(max_self, kernel(x, x));
    if (!(max_self > 0.0)) throw std::invalid_argument("sbp: all self-kernel values are zero");
    s.eta0 = 1.0 / std::sqrt(max_self);
  }
  return s;
}

namespace detail {

/// Uniform pick among the members of `cls` under water, falling back to
/// those at the level, then to the class minimum.
inline std::size_t sample_class(std::span<const double> shifted, std::span<const Label> y, Label cls,
                                double gamma, std::vector<std::size_t>& out, Rng& rng) {
  const double tol = level_tolerance(gamma);
  out.clear();
  for (std::size_t j = 0; j < shifted.size(); ++j)
    if (y[j] == cls && shifted[j] < gamma - tol) out.push_back(j);
  if (out.empty()) {
    for (std::size_t j = 0; j < shifted.size(); ++j)
      if (y[j] == cls && shifted[j] <= gamma + tol) out.push_back(j);
  }
  if (out.empty()) {
    std::size_t best = shifted.size();
    for (std::size_t j = 0; j < shifted.size(); ++j)
      if (y[j] == cls && (best == shifted.size() || shifted[j] < shifted[best])) best = j;
    out.push_back(best);
  }
  return out[uniform_index(rng, out.size())];
}

}  // namespace detail

/// One iteration. Costs exactly n kernel evaluations.
inline void sbp_step(SbpState& s, const Dataset& data, const KernelOracle& kernel, const SbpConfig& config,
                     Rng& rng) {
  const std::size_t n = data.size();
  const double volume = static_cast<double>(n) * config.nu;
  s.t += 1;
  const double eta = s.eta0 / std::sqrt(static_cast<double>(s.t));

  std::size_t i = 0;
  if (config.use_bias) {
    const WaterLevelBias level = find_gamma_and_bias(s.responses, s.labels, volume);
    s.gamma = level.gamma;
    s.bias = level.bias;
    s.shifted.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.shifted[j] = s.responses[j] + s.labels[j] * level.bias;
    // Optimal p* puts equal mass on each class.
    const Label cls = fair_coin(rng) ? 1 : -1;
    i = detail::sample_class(s.shifted, s.labels, cls, level.gamma, s.candidates, rng);
  } else {
    const WaterLevel level = find_gamma(s.responses, volume, s.scratch, config.pivot);
    s.gamma = level.gamma;
    support_set(s.responses, level.gamma, level_tolerance(level.gamma), s.candidates);
    i = s.candidates[uniform_index(rng, s.candidates.size())];
  }
  s.last_index = i;

  s.alpha[i] += eta;
  kernel.row(data.examples(), data[i], s.row);
  // |w + eta y_i Phi_i|^2 uses the response before this step's update.
  s.norm_sq += 2.0 * eta * s.responses[i] + eta * eta * s.row[i];
  const double yi = s.labels[i];
  for (std::size_t j = 0; j < n; ++j) s.responses[j] += eta * yi * s.labels[j] * s.row[j];

  if (config.norm_recompute_period > 0 && s.t % config.norm_recompute_period == 0) {
    double exact = 0.0;
    for (std::size_t j = 0; j < n; ++j) exact += s.alpha[j] * s.responses[j];
    s.norm_sq = std::max(0.0, exact);
  }

  if (s.norm_sq > 1.0) {
    const double inv = 1.0 / std::sqrt(s.norm_sq);
    for (std::size_t j = 0; j < n; ++j) {
      s.alpha[j] *= inv;
      s.responses[j] *= inv;
    }
    s.norm_sq = 1.0;
  }

  for (std::size_t j = 0; j < n; ++j) {
    s.alpha_sum[j] += s.alpha[j];
    s.response_sum[j] += s.responses[j];
  }
}

/// |w|^2 computed from the cached responses: sum_i alpha_i c_i.
inline double sbp_norm_from_responses(const SbpState& s) {
  double sum = 0.0;
  for (std::size_t j = 0; j < s.alpha.size(); ++j) sum += s.alpha[j] * s.responses[j];
  return sum;
}

/// Averaged iterate of a state (sums divided by t) with its water level.
struct AveragedIterate {
  std::vector<double> alpha;
  std::vector<double> responses;
  double gamma = 0.0;
  double bias = 0.0;
};

inline AveragedIterate sbp_average(const SbpState& s, const SbpConfig& config) {
  AveragedIterate avg;
  const double inv_t = 1.0 / static_cast<double>(std::max<std::uint64_t>(s.t, 1));
  const std::size_t n = s.alpha.size();
  avg.alpha.resize(n);
  avg.responses.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    avg.alpha[j] = s.alpha_sum[j] * inv_t;
    avg.responses[j] = s.response_sum[j] * inv_t;
  }
  const double volume = static_cast<double>(n) * config.nu;
  if (config.use_bias) {
    const WaterLevelBias level = find_gamma_and_bias(avg.responses, s.labels, volume);
    avg.gamma = level.gamma;
    avg.bias = level.bias;
  } else {
    avg.gamma = find_gamma(avg.responses, volume, config.pivot).gamma;
  }
  return avg;
}

namespace detail {

/// Hinge loss of the averaged iterate after rescaling by 1/gamma (left
/// unscaled while gamma is not positive); needs no kernel evaluations.
inline double averaged_hinge(const AveragedIterate& avg, std::span<const Label> y, double scale) {
  std::vector<double> margins(avg.responses.size());
  for (std::size_t j = 0; j < margins.size(); ++j)
    margins[j] = (avg.responses[j] + y[j] * avg.bias) * scale;
  return losses_from_margins(margins).hinge;
}

inline void record_average(MetricsRecorder& rec, const SbpState& s, const SbpConfig& config,
                           std::uint64_t train_evals, bool final_point) {
  const AveragedIterate avg = sbp_average(s, config);
  const double scale = avg.gamma > 0.0 ? 1.0 / avg.gamma : 1.0;
  std::vector<double> alpha = avg.alpha;
  for (double& a : alpha) a *= scale;
  const double hinge = averaged_hinge(avg, s.labels, scale);
  if (final_point) rec.finish(s.t, train_evals, hinge, alpha, avg.bias * scale);
  else rec.sample(s.t, train_evals, hinge, alpha, avg.bias * scale);
}

}  // namespace detail

/// Runs `iterations` steps and returns the averaged iterate rescaled by its
/// objective value. Kernel cost is n (step size) + n per iteration.
inline std::pair<TrainedModel, RunRecord> sbp_train(const Dataset& data, const KernelOracle& kernel,
                                                    const SbpConfig& config,
                                                    const MetricsOptions& metrics = {}) {
  const std::uint64_t start_evals = kernel.evals();
  SbpState state = sbp_init(data, kernel, config);
  Rng rng(config.seed);
  MetricsRecorder rec(metrics, data, kernel.spec());
  rec.record().metadata["solver"] = "sbp";
  rec.record().metadata["seed"] = std::to_string(config.seed);
  rec.record().metadata["nu"] = format_double(config.nu);
  rec.record().metadata["iterations"] = std::to_string(config.iterations);
  rec.record().metadata["bias"] = config.use_bias ? "1" : "0";

  for (std::uint64_t t = 1; t <= config.iterations; ++t) {
    sbp_step(state, data, kernel, config, rng);
    const std::uint64_t used = kernel.evals() - start_evals;
    if (rec.due(used)) detail::record_average(rec, state, config, used, false);
  }
  const std::uint64_t used = kernel.evals() - start_evals;
  if (metrics.enabled) detail::record_average(rec, state, config, used, true);

  const AveragedIterate avg = sbp_average(state, config);
  if (!(avg.gamma > 0.0))
    throw SolverError("no positive margin achieved; solution not rescalable");
  std::vector<double> alpha = avg.alpha;
  for (double& a : alpha) a /= avg.gamma;
  TrainedModel model = TrainedModel::from_dense("sbp", data, alpha, kernel.spec(), config.use_bias,
                                                config.use_bias ? avg.bias / avg.gamma : 0.0, used);
  return {std::move(model), std::move(rec.record())};
}

struct RescaleReport {
  double norm = 0.0;          ///< |w| of the rescaled model
  double loss = 0.0;          ///< empirical hinge loss of the rescaled model
  double norm_bound = 0.0;    ///< |u| / (1 - eps |u|)
  double loss_bound = 0.0;    ///< L(u) / (1 - eps |u|)
  bool norm_holds = false;
  bool loss_holds = false;
  std::uint64_t kernel_evals = 0;
};

/// Checks the rescaling guarantee for an eps_bar-suboptimal solution against
/// a reference predictor u with the given norm and empirical hinge loss.
/// Costs n * support_size kernel evaluations.
inline RescaleReport rescale_check(const TrainedModel& model, const Dataset& data, const KernelOracle& kernel,
                                   double reference_norm, double reference_loss, double eps_bar,
                                   double slack = 1e-9) {
  const std::uint64_t start = kernel.evals();
  const std::size_t n = data.size();
  std::vector<double> raw(n, 0.0);  // <w, Phi(x_i)> without bias
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& s : model.support) raw[i] += s.alpha * s.label * kernel(data[s.index], data[i]);
  double norm_sq = 0.0;
  for (const auto& s : model.support) norm_sq += s.alpha * s.label * raw[s.index];
  std::vector<double> margins(n);
  for (std::size_t i = 0; i < n; ++i) margins[i] = data.label(i) * (raw[i] + model.bias);

  RescaleReport r;
  r.norm = std::sqrt(std::max(0.0, norm_sq));
  r.loss = losses_from_margins(margins).hinge;
  const double shrink = 1.0 - eps_bar * reference_norm;
  constexpr double inf = std::numeric_limits<double>::infinity();
  r.norm_bound = shrink > 0.0 ? reference_norm / shrink : inf;
  r.loss_bound = shrink > 0.0 ? reference_loss / shrink : inf;
  r.norm_holds = r.norm <= r.norm_bound + slack;
  r.loss_holds = r.loss <= r.loss_bound + slack;
  r.kernel_evals = kernel.evals() - start;
  return r;
}

}  // namespace sbp
