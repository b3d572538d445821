// Command-line front end: train, bench, calibrate-nu, fourier.
// Exit codes: 0 ok, 2 usage, 3 data, 4 solver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbp.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kSolver = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string data;
  std::string test;
  std::string kernel = "gaussian:1";
  std::optional<double> positive_class;
  std::uint64_t seed = 1;
  std::string out = ".";
};

sbp::Dataset load(const std::string& path, const Common& c, bool training = true) {
  sbp::Dataset d = sbp::load_libsvm(path, sbp::ParseOptions{c.positive_class});
  if (training && c.positive_class && d.positives() == 0)
    throw sbp::DataError("positive class " + sbp::format_double(*c.positive_class) + " does not occur in '" + path + "'");
  return d;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw sbp::DataError("cannot write '" + path.string() + "'");
  f << text;
}

int run_train(const Common& c, const std::string& solver, std::optional<double> nu, std::optional<double> lambda,
              std::uint64_t iters, bool bias, bool timing) {
  if (solver == "sbp" && !nu) throw UsageError("--nu is required for --solver sbp");
  if ((solver == "pegasos" || solver == "sdca") && !lambda)
    throw UsageError("--lambda is required for --solver " + solver);
  if (bias && solver != "sbp") throw UsageError("--bias is only supported by --solver sbp");
  const sbp::KernelSpec kernel = sbp::KernelSpec::parse(c.kernel);
  const sbp::Dataset train = load(c.data, c);
  sbp::Dataset test;
  if (!c.test.empty()) test = load(c.test, c, false);

  sbp::SolverSetup setup;
  setup.solver = solver;
  setup.nu = nu.value_or(0.0);
  setup.lambda = lambda.value_or(0.0);
  setup.iterations = iters;
  setup.seed = c.seed;
  setup.bias = bias;
  sbp::MetricsOptions metrics;
  metrics.test = test.empty() ? nullptr : &test;
  metrics.wall_clock = timing;
  sbp::SolverRun run = sbp::run_solver(setup, train, kernel, metrics);
  run.record.metadata["kernel"] = kernel.describe();
  run.record.metadata["train"] = c.data;

  std::filesystem::create_directories(c.out);
  write_file(std::filesystem::path(c.out) / "model.txt", sbp::model_to_string(run.model));
  write_file(std::filesystem::path(c.out) / "run.csv", sbp::run_csv_string(run.record));
  std::cout << "solver " << solver << "\nsupport " << run.model.support_size() << "\nkernel_evals "
            << run.model.kernel_evals << '\n';
  if (!test.empty()) {
    sbp::KernelOracle eval(kernel);
    const sbp::Losses l = sbp::evaluate(run.model, train, test, eval);
    std::cout << "test_hinge " << sbp::format_double(l.hinge) << "\ntest_zero_one " << sbp::format_double(l.zero_one)
              << '\n';
  }
  return 0;
}

int run_bench(const std::string& plan_path, const std::optional<std::string>& out, bool timing) {
  std::ifstream in(plan_path);
  if (!in) throw sbp::DataError("cannot open plan '" + plan_path + "'");
  sbp::BenchPlan plan;
  try {
    plan = sbp::parse_plan(in);
  } catch (const sbp::ParseError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  // Relative dataset paths are resolved against the plan's directory.
  const auto base = std::filesystem::path(plan_path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(plan.train_path);
  resolve(plan.test_path);
  if (out) plan.out = *out;
  if (timing) plan.timing = true;
  const sbp::PlanResult r = sbp::run_plan(plan);
  if (r.calibration) std::cout << "nu " << sbp::format_double(r.nu) << '\n';
  std::cout << "runs " << r.run_files.size() << "\nfailures " << r.failures.size() << "\naggregate "
            << r.aggregate_file << '\n';
  return r.run_files.empty() ? kSolver : 0;
}

int run_calibrate(const Common& c, double lambda, std::uint64_t budget) {
  const sbp::KernelSpec kernel = sbp::KernelSpec::parse(c.kernel);
  const sbp::Dataset train = load(c.data, c);
  if (budget == 0) budget = 50 * static_cast<std::uint64_t>(train.size()) * train.size();
  sbp::KernelOracle k(kernel);
  const sbp::Calibration cal = sbp::calibrate_nu(train, k, lambda, budget, c.seed);
  std::cout << "nu " << sbp::format_double(cal.nu) << "\nnorm " << sbp::format_double(cal.norm) << "\nloss "
            << sbp::format_double(cal.loss) << "\nduality_gap " << sbp::format_double(cal.duality_gap)
            << "\nkernel_evals " << cal.kernel_evals << "\nsteps " << cal.steps << '\n';
  return 0;
}

int run_fourier(const Common& c, const std::string& k_list, double lambda, std::uint64_t iters,
                const std::string& solver, std::optional<double> nu, std::uint64_t solver_iters) {
  const sbp::KernelSpec kernel = sbp::KernelSpec::parse(c.kernel);
  if (kernel.kind != sbp::KernelKind::Gaussian) throw UsageError("fourier requires --kernel gaussian:SIGMA2");
  if (c.test.empty()) throw UsageError("fourier requires --test FILE");
  std::vector<std::size_t> ks;
  std::istringstream ss(k_list);
  for (std::string tok; std::getline(ss, tok, ',');) {
    auto v = sbp::parse_integer<std::size_t>(tok);
    if (!v || *v == 0) throw UsageError("bad --k-list entry '" + tok + "'");
    ks.push_back(*v);
  }
  if (ks.empty()) throw UsageError("--k-list is empty");
  const sbp::Dataset train = load(c.data, c);
  const sbp::Dataset test = load(c.test, c, false);
  sbp::FourierSolverConfig cfg;
  cfg.lambda = lambda;
  cfg.linear_iterations = iters;
  cfg.seed = c.seed;
  cfg.kernel_solver.solver = solver == "none" ? "" : solver;
  cfg.kernel_solver.seed = c.seed;
  cfg.kernel_solver.lambda = lambda;
  cfg.kernel_solver.nu = nu.value_or(0.0);
  cfg.kernel_solver.iterations = solver_iters > 0 ? solver_iters : 10 * train.size();
  if (solver == "sbp" && !nu) throw UsageError("--nu is required for the sbp reference curve");
  const auto rows = sbp::fourier_plan(train, test, kernel, ks, cfg);
  std::filesystem::create_directories(c.out);
  std::ostringstream csv;
  sbp::write_fourier_csv(csv, rows);
  write_file(std::filesystem::path(c.out) / "fourier.csv", csv.str());
  std::cout << "rows " << rows.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel SVM training on the slack-constrained objective"};
  app.require_subcommand(1);

  Common c;
  auto add_common = [&](CLI::App* sub, bool needs_data = true) {
    if (needs_data) sub->add_option("data", c.data, "training set (LIBSVM format)")->required();
    sub->add_option("--kernel", c.kernel, "gaussian:SIGMA2 or linear");
    sub->add_option("--test", c.test, "held-out set (LIBSVM format)");
    sub->add_option("--positive-class", c.positive_class, "map this label to +1 and all others to -1");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "output directory");
  };

  std::string solver = "sbp";
  std::optional<double> nu, lambda;
  std::uint64_t iters = 1000;
  bool bias = false;
  bool timing = false;
  auto* train = app.add_subcommand("train", "train one solver on one dataset");
  add_common(train);
  train->add_option("--solver", solver)->check(CLI::IsMember({"sbp", "pegasos", "sdca", "perceptron"}));
  train->add_option("--nu", nu, "slack budget per example (sbp)")->check(CLI::NonNegativeNumber);
  train->add_option("--lambda", lambda, "regularization (pegasos, sdca)")->check(CLI::PositiveNumber);
  train->add_option("--iters", iters, "iterations (perceptron: passes)")->check(CLI::PositiveNumber);
  train->add_flag("--bias", bias, "learn an unregularized bias (sbp)");
  train->add_flag("--timing", timing, "fill the wall_clock_ns column");

  std::string plan_path;
  std::optional<std::string> bench_out;
  auto* bench = app.add_subcommand("bench", "run a benchmark plan");
  bench->add_option("plan", plan_path, "plan file")->required();
  bench->add_option("--out", bench_out, "output directory (overrides the plan)");
  bench->add_flag("--timing", timing, "fill the wall_clock_ns column");

  double cal_lambda = 0.0;
  std::uint64_t budget = 0;
  auto* calibrate = app.add_subcommand("calibrate-nu", "derive nu from lambda");
  add_common(calibrate);
  calibrate->add_option("--lambda", cal_lambda)->required()->check(CLI::PositiveNumber);
  calibrate->add_option("--budget", budget, "kernel evaluation cap (default 50 n^2)");

  std::string k_list = "1,2,4,8,16,32,64,128";
  std::string ref_solver = "none";
  std::uint64_t ref_iters = 0;
  double f_lambda = 1e-3;
  std::uint64_t f_iters = 0;
  auto* fourier = app.add_subcommand("fourier", "random Fourier features vs exact kernel");
  add_common(fourier);
  fourier->add_option("--k-list", k_list, "comma-separated feature pair counts");
  fourier->add_option("--lambda", f_lambda, "regularization of the linear solver")->check(CLI::PositiveNumber);
  fourier->add_option("--iters", f_iters, "linear solver iterations (default 10 n)");
  fourier->add_option("--solver", ref_solver, "exact-kernel reference curve")
      ->check(CLI::IsMember({"none", "sbp", "pegasos", "sdca", "perceptron"}));
  fourier->add_option("--nu", nu, "slack budget for an sbp reference curve");
  fourier->add_option("--solver-iters", ref_iters, "reference solver iterations (default 10 n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*train) return run_train(c, solver, nu, lambda, iters, bias, timing);
    if (*bench) return run_bench(plan_path, bench_out, timing);
    if (*calibrate) return run_calibrate(c, cal_lambda, budget);
    if (*fourier) return run_fourier(c, k_list, f_lambda, f_iters, ref_solver, nu, ref_iters);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const sbp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const sbp::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kUsage;
}
