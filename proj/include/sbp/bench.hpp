#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sbp/baselines.hpp"
#include "sbp/data.hpp"
#include "sbp/error.hpp"
#include "sbp/fourier.hpp"
#include "sbp/kernels.hpp"
#include "sbp/model.hpp"
#include "sbp/run_record.hpp"
#include "sbp/sbp.hpp"

namespace sbp {

// ---------------------------------------------------------------- nu from lambda

struct Calibration {
  double nu = 0.0;
  double norm = 0.0;          ///< |w*| of the inner regularized solve
  double loss = 0.0;          ///< empirical hinge loss of w*
  double duality_gap = 0.0;   ///< primal - dual at the end of the inner solve
  std::uint64_t kernel_evals = 0;
  std::uint64_t steps = 0;
};

/// Picks the slack budget whose slack-constrained optimum matches the
/// lambda-regularized one: nu = L(w*) / |w*|. w* is approximated by SDCA
/// within `budget` kernel evaluations (the SDCA diagonal included). SDCA
/// also stops early once a full sweep of n coordinates leaves alpha unchanged.
inline Calibration calibrate_nu(const Dataset& data, const KernelOracle& kernel, double lambda,
                                std::uint64_t budget, std::uint64_t seed = 1) {
  if (!(lambda > 0.0)) throw std::invalid_argument("calibrate_nu: lambda must be > 0");
  const std::size_t n = data.size();
  if (budget < 2 * static_cast<std::uint64_t>(n))
    throw std::invalid_argument("calibrate_nu: budget must cover at least 2n kernel evaluations");
  const std::uint64_t start = kernel.evals();
  SdcaState s = sdca_init(data, kernel, lambda);
  Rng rng(seed);
  std::uint64_t idle = 0;
  Calibration c;
  while (kernel.evals() - start + n <= budget && idle < n) {
    const double moved = sdca_update(s, data, kernel, uniform_index(rng, n));
    idle = moved == 0.0 ? idle + 1 : 0;
    ++c.steps;
  }
  const double norm_sq = sdca_norm_sq(s);
  c.norm = std::sqrt(std::max(0.0, norm_sq));
  c.loss = detail::mean_hinge_of_responses(s.responses, 1.0);
  c.duality_gap = sdca_primal(s) - sdca_dual(s);
  c.kernel_evals = kernel.evals() - start;
  if (!(c.norm > 1e-12)) throw SolverError("lambda too large for calibration");
  c.nu = c.loss / c.norm;
  return c;
}

// ---------------------------------------------------------------- plans

/// Flat key = value plan; see docs/plan-format.md.
struct BenchPlan {
  std::string train_path;
  std::string test_path;
  std::optional<SyntheticSpec> synthetic;
  std::size_t test_n = 0;        ///< synthetic test size (generated with synthetic seed + 1)
  double test_fraction = 0.0;    ///< split of the training file when no test file is given
  std::optional<double> positive_class;
  std::string kernel = "gaussian:1";
  std::vector<std::string> solvers{"sbp"};
  double lambda = 0.0;
  std::optional<double> nu;       ///< empty: calibrate from lambda
  std::uint64_t calibration_budget = 0;  ///< 0: 50 n^2
  double epochs = 1.0;            ///< iterations = epochs * n (perceptron: passes = ceil(epochs))
  std::uint64_t iterations = 0;   ///< overrides epochs when nonzero
  bool bias = false;
  std::size_t repeat = 1;
  std::uint64_t seed = 1;
  double metrics_ratio = 2.0;
  bool timing = false;
  std::size_t threads = 1;
  std::string out = "bench_out";
};

inline BenchPlan parse_plan(std::istream& in) {
  BenchPlan plan;
  SyntheticSpec synth;
  bool has_synth = false;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto real = [&] {
      auto v = parse_double(value);
      if (!v) throw ParseError(line_no, "bad number for '" + key + "'");
      return *v;
    };
    auto count = [&] {
      auto v = parse_integer<std::uint64_t>(value);
      if (!v) {
        // allow 1e6 style
        auto r = parse_double(value);
        if (!r || *r < 0 || *r != std::floor(*r)) throw ParseError(line_no, "bad integer for '" + key + "'");
        return static_cast<std::uint64_t>(*r);
      }
      return *v;
    };
    auto flag = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw ParseError(line_no, "bad boolean for '" + key + "'");
    };
    if (key == "train") plan.train_path = value;
    else if (key == "test") plan.test_path = value;
    else if (key == "test_fraction") plan.test_fraction = real();
    else if (key == "test_n") plan.test_n = count();
    else if (key == "positive_class") plan.positive_class = real();
    else if (key == "kernel") plan.kernel = value;
    else if (key == "solvers") {
      plan.solvers.clear();
      std::istringstream ss(value);
      for (std::string s; std::getline(ss, s, ',');) {
        s = trim(s);
        if (s != "sbp" && s != "pegasos" && s != "sdca" && s != "perceptron")
          throw ParseError(line_no, "unknown solver '" + s + "'");
        plan.solvers.push_back(s);
      }
    } else if (key == "lambda") plan.lambda = real();
    else if (key == "nu") {
      if (value == "auto") plan.nu.reset();
      else plan.nu = real();
    } else if (key == "calibration_budget") plan.calibration_budget = count();
    else if (key == "epochs") plan.epochs = real();
    else if (key == "iterations") plan.iterations = count();
    else if (key == "bias") plan.bias = flag();
    else if (key == "repeat") plan.repeat = count();
    else if (key == "seed") plan.seed = count();
    else if (key == "metrics_ratio") plan.metrics_ratio = real();
    else if (key == "timing") plan.timing = flag();
    else if (key == "threads") plan.threads = count();
    else if (key == "out") plan.out = value;
    else if (key == "synthetic") {
      has_synth = true;
      try {
        synth.kind = SyntheticSpec::parse_kind(value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, e.what());
      }
    } else if (key == "synthetic.n") synth.n = count();
    else if (key == "synthetic.dimension") synth.dimension = count();
    else if (key == "synthetic.seed") synth.seed = count();
    else if (key == "synthetic.separation") synth.separation = real();
    else if (key == "synthetic.noise_rate") synth.noise_rate = real();
    else if (key == "synthetic.margin") synth.margin = real();
    else if (key == "synthetic.radius") synth.radius = real();
    else throw ParseError(line_no, "unknown key '" + key + "'");
  }
  if (has_synth) plan.synthetic = synth;
  if (plan.repeat < 1) throw std::invalid_argument("plan: repeat must be >= 1");
  if (plan.synthetic.has_value() == !plan.train_path.empty())
    throw std::invalid_argument("plan: give exactly one of 'train' or 'synthetic'");
  if (plan.solvers.empty()) throw std::invalid_argument("plan: no solvers");
  if (!(plan.metrics_ratio > 1.0)) throw std::invalid_argument("plan: metrics_ratio must be > 1");
  if (plan.threads < 1) plan.threads = 1;
  return plan;
}

inline BenchPlan parse_plan_string(const std::string& text) {
  std::istringstream is(text);
  return parse_plan(is);
}

struct PlanData {
  Dataset train;
  Dataset test;
};

inline PlanData load_plan_data(const BenchPlan& plan) {
  PlanData d;
  ParseOptions opts{plan.positive_class};
  if (plan.synthetic) {
    d.train = generate(*plan.synthetic);
    if (plan.test_n > 0) {
      SyntheticSpec ts = *plan.synthetic;
      ts.n = plan.test_n;
      ts.seed = plan.synthetic->seed + 1;
      d.test = generate(ts);
    }
  } else {
    d.train = load_libsvm(plan.train_path, opts);
  }
  if (!plan.test_path.empty()) {
    d.test = load_libsvm(plan.test_path, opts);
  } else if (plan.test_fraction > 0.0 && !plan.synthetic) {
    auto [tr, te] = split(d.train, plan.test_fraction, plan.seed);
    d.train = std::move(tr);
    d.test = std::move(te);
  }
  if (d.train.empty()) throw DataError("plan: empty training set");
  return d;
}

// ---------------------------------------------------------------- single runs

/// Everything needed to run one solver once.
struct SolverSetup {
  std::string solver;  ///< sbp, pegasos, sdca or perceptron
  double nu = 0.0;
  double lambda = 0.0;
  std::uint64_t iterations = 1;  ///< perceptron: passes
  std::uint64_t seed = 1;
  bool bias = false;
};

struct SolverRun {
  TrainedModel model;
  RunRecord record;
};

inline SolverRun run_solver(const SolverSetup& setup, const Dataset& train, const KernelSpec& kernel_spec,
                            const MetricsOptions& metrics) {
  KernelOracle kernel(kernel_spec);
  if (setup.solver == "sbp") {
    SbpConfig c;
    c.nu = setup.nu;
    c.iterations = setup.iterations;
    c.seed = setup.seed;
    c.use_bias = setup.bias;
    auto [m, r] = sbp_train(train, kernel, c, metrics);
    return {std::move(m), std::move(r)};
  }
  if (setup.solver == "pegasos") {
    auto [m, r] = pegasos_train(train, kernel, {setup.lambda, setup.iterations, setup.seed, false}, metrics);
    return {std::move(m), std::move(r)};
  }
  if (setup.solver == "sdca") {
    auto [m, r] = sdca_train(train, kernel, {setup.lambda, setup.iterations, setup.seed}, metrics);
    return {std::move(m), std::move(r)};
  }
  if (setup.solver == "perceptron") {
    auto [p, r] = perceptron_train(train, kernel, setup.seed, setup.iterations, metrics);
    return {p.to_model(train, kernel_spec), std::move(r)};
  }
  throw std::invalid_argument("unknown solver '" + setup.solver + "'");
}

// ---------------------------------------------------------------- aggregation

/// Type-7 (linear interpolation) quantile of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Last recorded held-out error at or below `budget` training evaluations.
inline std::optional<double> error_at_budget(const RunRecord& record, std::uint64_t budget) {
  std::optional<double> out;
  for (const auto& s : record.samples) {
    if (s.train_kernel_evals > budget) break;
    out = s.test_zero_one;
  }
  return out;
}

struct AggregateRow {
  std::string solver;
  std::uint64_t budget = 0;
  std::size_t runs = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Per-solver, per-budget median and quartiles of held-out error across runs.
/// Input order does not matter: rows are keyed by solver name and budget and
/// values are sorted before taking quantiles.
inline std::vector<AggregateRow> aggregate_runs(const std::vector<std::pair<std::string, RunRecord>>& runs,
                                                double ratio) {
  std::map<std::string, std::vector<const RunRecord*>> by_solver;
  std::uint64_t max_evals = 1;
  for (const auto& [solver, rec] : runs) {
    by_solver[solver].push_back(&rec);
    if (!rec.samples.empty()) max_evals = std::max(max_evals, rec.samples.back().train_kernel_evals);
  }
  const auto grid = budget_grid(max_evals, ratio);
  std::vector<AggregateRow> rows;
  for (const auto& [solver, recs] : by_solver) {
    for (std::uint64_t b : grid) {
      std::vector<double> values;
      for (const RunRecord* r : recs) {
        auto e = error_at_budget(*r, b);
        if (e && !std::isnan(*e)) values.push_back(*e);
      }
      if (values.empty()) continue;
      std::sort(values.begin(), values.end());
      rows.push_back({solver, b, values.size(), quantile_sorted(values, 0.5), quantile_sorted(values, 0.25),
                      quantile_sorted(values, 0.75)});
    }
  }
  return rows;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "solver,train_kernel_evals,runs,median_test_zero_one,q1_test_zero_one,q3_test_zero_one\n";
  for (const auto& r : rows) {
    out << r.solver << ',' << r.budget << ',' << r.runs << ',' << format_double(r.median) << ','
        << format_double(r.q1) << ',' << format_double(r.q3) << '\n';
  }
}

struct PlanResult {
  std::vector<std::string> run_files;
  std::string aggregate_file;
  std::vector<std::string> failures;  ///< "solver,seed,message"
  std::optional<Calibration> calibration;
  double nu = 0.0;
};

inline std::uint64_t plan_iterations(const BenchPlan& plan, const std::string& solver, std::size_t n) {
  if (solver == "perceptron") {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(plan.epochs)));
  }
  if (plan.iterations > 0) return plan.iterations;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(plan.epochs * static_cast<double>(n))));
}

/// Executes every (solver, seed) pair of a loaded plan and writes
/// `<solver>_seed<seed>.csv` per run plus `aggregate.csv` into plan.out.
/// A failing run is listed in `failures.csv` and does not stop the plan.
inline PlanResult run_plan(const BenchPlan& plan, const PlanData& data) {
  namespace fs = std::filesystem;
  const KernelSpec kernel = KernelSpec::parse(plan.kernel);
  PlanResult result;

  const bool needs_nu = std::find(plan.solvers.begin(), plan.solvers.end(), "sbp") != plan.solvers.end();
  if (needs_nu) {
    if (plan.nu) {
      result.nu = *plan.nu;
    } else {
      const std::uint64_t n = data.train.size();
      const std::uint64_t budget = plan.calibration_budget > 0 ? plan.calibration_budget : 50 * n * n;
      KernelOracle k(kernel);
      result.calibration = calibrate_nu(data.train, k, plan.lambda, budget, plan.seed);
      result.nu = result.calibration->nu;
    }
  }

  struct Job {
    SolverSetup setup;
    std::string file;
  };
  std::vector<Job> jobs;
  for (const auto& solver : plan.solvers) {
    for (std::size_t r = 0; r < plan.repeat; ++r) {
      SolverSetup s;
      s.solver = solver;
      s.nu = result.nu;
      s.lambda = plan.lambda;
      s.iterations = plan_iterations(plan, solver, data.train.size());
      s.seed = plan.seed + r;
      s.bias = plan.bias;
      jobs.push_back({s, solver + "_seed" + std::to_string(s.seed) + ".csv"});
    }
  }

  MetricsOptions metrics;
  metrics.test = data.test.empty() ? nullptr : &data.test;
  metrics.ratio = plan.metrics_ratio;
  metrics.wall_clock = plan.timing;

  std::vector<std::optional<RunRecord>> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  auto run_job = [&](std::size_t j) {
    try {
      records[j] = run_solver(jobs[j].setup, data.train, kernel, metrics).record;
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  };
  for (std::size_t first = 0; first < jobs.size(); first += plan.threads) {
    std::vector<std::future<void>> batch;
    for (std::size_t j = first; j < std::min(jobs.size(), first + plan.threads); ++j)
      batch.push_back(std::async(plan.threads > 1 ? std::launch::async : std::launch::deferred, run_job, j));
    for (auto& f : batch) f.get();
  }

  fs::create_directories(plan.out);
  std::vector<std::pair<std::string, RunRecord>> done;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!records[j]) {
      std::string msg = errors[j];
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      result.failures.push_back(jobs[j].setup.solver + "," + std::to_string(jobs[j].setup.seed) + "," + msg);
      continue;
    }
    const fs::path path = fs::path(plan.out) / jobs[j].file;
    std::ofstream f(path, std::ios::binary);
    write_run_csv(f, *records[j]);
    result.run_files.push_back(path.string());
    done.emplace_back(jobs[j].setup.solver, std::move(*records[j]));
  }
  const fs::path agg = fs::path(plan.out) / "aggregate.csv";
  {
    std::ofstream f(agg, std::ios::binary);
    write_aggregate_csv(f, aggregate_runs(done, plan.metrics_ratio));
  }
  result.aggregate_file = agg.string();
  if (!result.failures.empty()) {
    std::ofstream f(fs::path(plan.out) / "failures.csv", std::ios::binary);
    f << "solver,seed,message\n";
    for (const auto& line : result.failures) f << line << '\n';
  }
  return result;
}

inline PlanResult run_plan(const BenchPlan& plan) { return run_plan(plan, load_plan_data(plan)); }

// ---------------------------------------------------------------- Fourier comparison

struct FourierSolverConfig {
  double lambda = 1e-3;            ///< regularization for the linear solver on the features
  std::uint64_t linear_iterations = 0;  ///< 0: 10 n
  std::uint64_t seed = 1;
  SolverSetup kernel_solver{};     ///< exact-kernel reference curve; empty solver skips it
  double metrics_ratio = 2.0;
};

struct FourierRow {
  std::string method;  ///< "fourier" or a kernel solver name
  std::size_t pairs = 0;  ///< 0 for kernel-solver rows
  std::uint64_t inner_products = 0;
  double test_zero_one = 0.0;
};

/// Held-out error of a linear solver on k-pair Fourier features, for each k,
/// with cost k n inner products (the linear solve itself is not charged);
/// plus the learning curve of an exact-kernel solver, one Gaussian kernel
/// evaluation counted as one inner product.
inline std::vector<FourierRow> fourier_plan(const Dataset& train, const Dataset& test, const KernelSpec& kernel,
                                            const std::vector<std::size_t>& pair_counts,
                                            const FourierSolverConfig& config) {
  if (kernel.kind != KernelKind::Gaussian) throw std::invalid_argument("fourier: requires a gaussian kernel");
  if (pair_counts.empty()) throw std::invalid_argument("fourier: empty list of feature counts");
  if (train.empty() || test.empty()) throw std::invalid_argument("fourier: need training and test data");
  const std::size_t dim = std::max(train.dimension(), test.dimension());
  std::vector<FourierRow> rows;
  for (std::size_t k : pair_counts) {
    FourierMap map(config.seed, k, dim, kernel.sigma2);
    const Dataset lin_train = map.linearize(train);
    const std::uint64_t cost = map.inner_products();
    const Dataset lin_test = map.linearize(test);
    KernelOracle linear(KernelSpec::linear());
    const std::uint64_t iters =
        config.linear_iterations > 0 ? config.linear_iterations : 10 * static_cast<std::uint64_t>(train.size());
    MetricsOptions off;
    off.enabled = false;
    auto [model, rec] = pegasos_train(lin_train, linear, {config.lambda, iters, config.seed, false}, off);
    KernelOracle eval(KernelSpec::linear());
    rows.push_back({"fourier", k, cost, evaluate(model, lin_train, lin_test, eval).zero_one});
  }
  if (!config.kernel_solver.solver.empty()) {
    MetricsOptions metrics;
    metrics.test = &test;
    metrics.ratio = config.metrics_ratio;
    const SolverRun run = run_solver(config.kernel_solver, train, kernel, metrics);
    for (const auto& s : run.record.samples)
      rows.push_back({config.kernel_solver.solver, 0, s.train_kernel_evals, s.test_zero_one});
  }
  return rows;
}

inline void write_fourier_csv(std::ostream& out, const std::vector<FourierRow>& rows) {
  out << "method,k,inner_products,test_zero_one\n";
  for (const auto& r : rows) {
    out << r.method << ',';
    if (r.pairs > 0) out << r.pairs;
    out << ',' << r.inner_products << ',' << format_double(r.test_zero_one) << '\n';
  }
}

}  // namespace sbp
