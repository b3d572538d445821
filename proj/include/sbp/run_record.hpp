#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/kernels.hpp"
#include "sbp/loss.hpp"
#include "sbp/random.hpp"

namespace sbp {

struct RunSample {
  std::uint64_t iteration = 0;
  std::uint64_t train_kernel_evals = 0;
  std::uint64_t eval_kernel_evals = 0;
  double empirical_hinge = 0.0;
  double test_zero_one = std::numeric_limits<double>::quiet_NaN();
  std::int64_t wall_clock_ns = 0;
};

/// Learning curve of one solver run. Samples are sorted by iteration and
/// their training kernel-evaluation counts are strictly increasing.
struct RunRecord {
  std::map<std::string, std::string> metadata;
  std::vector<RunSample> samples;
};

inline constexpr const char* kRunCsvHeader =
    "iteration,train_kernel_evals,eval_kernel_evals,empirical_hinge,test_zero_one,wall_clock_ns";

inline void write_run_csv(std::ostream& out, const RunRecord& record) {
  out << kRunCsvHeader << '\n';
  for (const auto& s : record.samples) {
    out << s.iteration << ',' << s.train_kernel_evals << ',' << s.eval_kernel_evals << ','
        << format_double(s.empirical_hinge) << ',' << format_double(s.test_zero_one) << ','
        << s.wall_clock_ns << '\n';
  }
}

inline std::string run_csv_string(const RunRecord& record) {
  std::ostringstream os;
  write_run_csv(os, record);
  return os.str();
}

struct MetricsOptions {
  const Dataset* test = nullptr;  ///< held-out set for the 0/1 column; NaN when absent
  double ratio = 2.0;             ///< geometric spacing of sample points in kernel evaluations
  bool wall_clock = false;        ///< when false the wall_clock_ns column is 0, keeping CSVs reproducible
  bool enabled = true;
};

/// Next point of the geometric budget grid strictly above `evals`.
inline std::uint64_t next_budget(std::uint64_t evals, double ratio) {
  double b = 1.0;
  while (b <= static_cast<double>(evals)) b = std::max(b + 1.0, std::ceil(b * ratio));
  return static_cast<std::uint64_t>(b);
}

/// Budget grid 1, ceil(r), ceil(ceil(r) r), ... up to and including the first point >= max.
inline std::vector<std::uint64_t> budget_grid(std::uint64_t max_evals, double ratio) {
  std::vector<std::uint64_t> grid;
  std::uint64_t b = 1;
  grid.push_back(b);
  while (b < max_evals) {
    b = next_budget(b, ratio);
    grid.push_back(b);
  }
  return grid;
}

/// Decides when to sample a run and evaluates held-out error with its own
/// kernel counter, so evaluation never inflates the training cost column.
class MetricsRecorder {
 public:
  MetricsRecorder(const MetricsOptions& options, const Dataset& train, const KernelSpec& kernel)
      : options_(options), train_(train), eval_kernel_(kernel), start_(std::chrono::steady_clock::now()) {
    if (!(options_.ratio > 1.0)) options_.ratio = 2.0;
    record_.metadata["rng"] = kRngIdentity;
    record_.metadata["kernel"] = kernel.describe();
  }

  RunRecord& record() noexcept { return record_; }
  std::uint64_t eval_kernel_evals() const noexcept { return eval_kernel_.evals(); }

  /// True once the training counter has crossed the next grid point.
  bool due(std::uint64_t train_evals) const noexcept {
    return options_.enabled && train_evals >= next_threshold_;
  }

  /// alpha is dense over training rows; score = sum alpha_j y_j K(x_j, x) + bias.
  void sample(std::uint64_t iteration, std::uint64_t train_evals, double empirical_hinge,
              std::span<const double> alpha, double bias) {
    if (!options_.enabled) return;
    RunSample s;
    s.iteration = iteration;
    s.train_kernel_evals = train_evals;
    s.empirical_hinge = empirical_hinge;
    if (options_.test != nullptr) s.test_zero_one = test_error(alpha, bias);
    s.eval_kernel_evals = eval_kernel_.evals();
    if (options_.wall_clock) {
      s.wall_clock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
    }
    if (!record_.samples.empty() && record_.samples.back().train_kernel_evals >= train_evals) {
      record_.samples.back() = s;  // no training cost since the last point: replace it
    } else {
      record_.samples.push_back(s);
    }
    next_threshold_ = next_budget(train_evals, options_.ratio);
  }

  /// Final point, unless the last sample already is this iteration.
  void finish(std::uint64_t iteration, std::uint64_t train_evals, double empirical_hinge,
              std::span<const double> alpha, double bias) {
    if (!options_.enabled) return;
    if (!record_.samples.empty() && record_.samples.back().iteration == iteration) return;
    sample(iteration, train_evals, empirical_hinge, alpha, bias);
  }

  /// Training-set hinge of an arbitrary expansion, charged to the
  /// evaluation counter (used by solvers that do not keep responses).
  double train_hinge(std::span<const double> alpha, double bias) {
    std::vector<double> margins(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i)
      margins[i] = train_.label(i) * score(alpha, bias, train_[i]);
    return losses_from_margins(margins).hinge;
  }

 private:
  double score(std::span<const double> alpha, double bias, const SparseExample& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      if (alpha[j] != 0.0) s += alpha[j] * train_.label(j) * eval_kernel_(train_[j], x);
    return s + bias;
  }

  double test_error(std::span<const double> alpha, double bias) {
    const Dataset& test = *options_.test;
    std::vector<double> margins(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) margins[i] = test.label(i) * score(alpha, bias, test[i]);
    return losses_from_margins(margins).zero_one;
  }

  MetricsOptions options_;
  const Dataset& train_;
  KernelOracle eval_kernel_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t next_threshold_ = 1;
  RunRecord record_;
};

}  // namespace sbp
