#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sbp/bench.hpp"

using namespace sbp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sbp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::size_t csv_count(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv" && e.path().filename() != "aggregate.csv") ++n;
  return n;
}

}  // namespace

TEST(Calibration, SeparableGivesZeroNu) {
  // Hard-margin separable with a small lambda: the regularized optimum has zero hinge loss.
  const auto d = testing_util::dataset({{{2.0}, 1}, {{-2.0}, -1}, {{3.0}, 1}, {{-2.5}, -1}});
  KernelOracle k(KernelSpec::linear());
  const auto c = calibrate_nu(d, k, 0.01, 100000);
  EXPECT_NEAR(c.nu, 0.0, 1e-12);
  EXPECT_NEAR(c.norm, 0.5, 1e-9);
  EXPECT_EQ(c.kernel_evals, k.evals());
}

TEST(Calibration, DeterministicAndBudgeted) {
  const auto d = testing_util::synthetic(SyntheticKind::XorRing, 60, 2, 4);
  KernelOracle k1(KernelSpec::gaussian(0.5)), k2(KernelSpec::gaussian(0.5));
  const auto a = calibrate_nu(d, k1, 0.01, 20000, 3);
  const auto b = calibrate_nu(d, k2, 0.01, 20000, 3);
  EXPECT_EQ(a.nu, b.nu);
  EXPECT_LE(a.kernel_evals, 20000u);
  EXPECT_GE(a.duality_gap, -1e-12);
}

TEST(Calibration, LambdaTooLarge) {
  // The box bound 1/(lambda n) caps |w*| far below the threshold.
  const auto d = testing_util::dataset({{{1e-8}, 1}, {{-1e-8}, -1}});
  KernelOracle k(KernelSpec::linear());
  EXPECT_THROW(calibrate_nu(d, k, 1e6, 1000), SolverError);
  EXPECT_THROW(calibrate_nu(d, k, 0.0, 1000), std::invalid_argument);
}

TEST(Calibration, MatchesGridOracleOnTwoGaussians) {
  SyntheticSpec s;
  s.kind = SyntheticKind::TwoGaussians;
  s.n = 80;
  s.dimension = 2;
  s.seed = 6;
  s.separation = 2.0;
  s.noise_rate = 0.1;
  const auto d = generate(s);
  const double lambda = 1.0 / d.size();
  const auto opt = oracle::regularized_grid_optimum(oracle::dense2(d), lambda);
  KernelOracle k(KernelSpec::linear());
  const auto c = calibrate_nu(d, k, lambda, 50 * d.size() * d.size());
  const double ref = opt.loss / opt.norm;
  EXPECT_NEAR(c.nu, ref, 0.1 * ref);
}

TEST(Plan, ParsesAllKeys) {
  const auto p = parse_plan_string(
      "# comment\n"
      "synthetic = margin_separable\nsynthetic.n = 40\nsynthetic.dimension = 3\nsynthetic.seed = 2\n"
      "synthetic.margin = 0.25\nsynthetic.radius = 2\nsynthetic.separation = 1.5\nsynthetic.noise_rate = 0.05\n"
      "test_n = 20\nkernel = linear\nsolvers = sbp, pegasos,sdca,perceptron\nlambda = 0.01\nnu = auto\n"
      "calibration_budget = 1e5\nepochs = 2\niterations = 7\nbias = false\nrepeat = 3\nseed = 11\n"
      "metrics_ratio = 1.5\ntiming = false\nthreads = 2\nout = somewhere\npositive_class = 3\n");
  ASSERT_TRUE(p.synthetic);
  EXPECT_EQ(p.synthetic->kind, SyntheticKind::MarginSeparable);
  EXPECT_EQ(p.synthetic->n, 40u);
  EXPECT_EQ(p.synthetic->margin, 0.25);
  EXPECT_EQ(p.solvers.size(), 4u);
  EXPECT_FALSE(p.nu);
  EXPECT_EQ(p.calibration_budget, 100000u);
  EXPECT_EQ(p.repeat, 3u);
  EXPECT_EQ(p.iterations, 7u);
  EXPECT_EQ(p.out, "somewhere");
  EXPECT_EQ(*p.positive_class, 3.0);
}

TEST(Plan, Rejections) {
  EXPECT_THROW(parse_plan_string("synthetic = xor_ring\nrepeat = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_plan_string("repeat = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_plan_string("synthetic = xor_ring\nfoo = 1\n"), ParseError);
  EXPECT_THROW(parse_plan_string("synthetic = xor_ring\nsolvers = smo\n"), ParseError);
  EXPECT_THROW(parse_plan_string("synthetic = xor_ring\nlambda = x\n"), ParseError);
  EXPECT_THROW(parse_plan_string("synthetic = xor_ring\njunk\n"), ParseError);
}

TEST(Plan, RepeatProducesOneCsvPerRunPlusAggregate) {
  const auto dir = temp_dir("repeat");
  auto plan = parse_plan_string(
      "synthetic = two_gaussians\nsynthetic.n = 40\ntest_n = 40\nkernel = gaussian:1\nsolvers = sbp\n"
      "nu = 0.1\nepochs = 2\nrepeat = 10\n");
  plan.out = dir.string();
  const auto r = run_plan(plan);
  EXPECT_EQ(r.run_files.size(), 10u);
  EXPECT_EQ(csv_count(dir), 10u);
  EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
  EXPECT_FALSE(fs::exists(dir / "failures.csv"));
  EXPECT_EQ(slurp(dir / "sbp_seed1.csv").rfind(kRunCsvHeader, 0), 0u);
}

TEST(Plan, TwoSolversInAggregateAndRerunIsByteIdentical) {
  const std::string text =
      "synthetic = xor_ring\nsynthetic.n = 50\ntest_n = 50\nkernel = gaussian:0.5\nsolvers = sbp,pegasos\n"
      "lambda = 0.02\nepochs = 3\nrepeat = 2\ncalibration_budget = 100000\n";
  const auto d1 = temp_dir("rerun1"), d2 = temp_dir("rerun2");
  auto p1 = parse_plan_string(text);
  p1.out = d1.string();
  auto p2 = p1;
  p2.out = d2.string();
  p2.threads = 2;
  const auto r1 = run_plan(p1);
  run_plan(p2);
  ASSERT_TRUE(r1.calibration);
  const std::string agg = slurp(d1 / "aggregate.csv");
  EXPECT_NE(agg.find("\nsbp,"), std::string::npos);
  EXPECT_NE(agg.find("\npegasos,"), std::string::npos);
  for (const auto& e : fs::directory_iterator(d1)) EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename()));
}

TEST(Plan, FailuresAreRecordedNotFatal) {
  // Identical points with opposite labels make the slack solver fail at nu = 0.
  const auto dir = temp_dir("failures");
  {
    std::ofstream f(dir / "bad.svm");
    f << "1 1:1\n-1 1:1\n";
  }
  auto plan = parse_plan_string("train = " + (dir / "bad.svm").string() +
                                "\nkernel = linear\nsolvers = sbp,sdca\nnu = 0\nlambda = 0.1\nepochs = 5\n");
  plan.out = (dir / "out").string();
  const auto r = run_plan(plan);
  EXPECT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.run_files.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "out" / "failures.csv"));
}

TEST(Aggregate, OrderIndependentQuartiles) {
  std::vector<std::pair<std::string, RunRecord>> runs;
  for (int r = 0; r < 5; ++r) {
    RunRecord rec;
    for (std::uint64_t b : {1, 2, 4, 8}) {
      RunSample s;
      s.train_kernel_evals = b;
      s.iteration = b;
      s.test_zero_one = 0.1 * r + 0.01 * b;
      rec.samples.push_back(s);
    }
    runs.emplace_back(r % 2 ? "a" : "b", rec);
  }
  auto shuffled = runs;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::ostringstream x, y;
  write_aggregate_csv(x, aggregate_runs(runs, 2.0));
  write_aggregate_csv(y, aggregate_runs(shuffled, 2.0));
  EXPECT_EQ(x.str(), y.str());
  const auto rows = aggregate_runs(runs, 2.0);
  // solver "b" holds runs 0, 2, 4: at budget 8 errors are 0.08, 0.28, 0.48.
  const auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.solver == "b" && r.budget == 8; });
  ASSERT_NE(it, rows.end());
  EXPECT_DOUBLE_EQ(it->median, 0.28);
  EXPECT_DOUBLE_EQ(it->q1, 0.18);
  EXPECT_DOUBLE_EQ(it->q3, 0.38);
  EXPECT_EQ(it->runs, 3u);
}

TEST(Aggregate, StepInterpolation) {
  RunRecord rec;
  for (std::uint64_t b : {3, 10}) {
    RunSample s;
    s.train_kernel_evals = b;
    s.test_zero_one = b == 3 ? 0.5 : 0.2;
    rec.samples.push_back(s);
  }
  EXPECT_FALSE(error_at_budget(rec, 2));
  EXPECT_EQ(*error_at_budget(rec, 9), 0.5);
  EXPECT_EQ(*error_at_budget(rec, 10), 0.2);
}

TEST(Budget, GeometricGrid) {
  EXPECT_EQ(budget_grid(20, 2.0), (std::vector<std::uint64_t>{1, 2, 4, 8, 16, 32}));
  EXPECT_EQ(next_budget(0, 2.0), 1u);
  EXPECT_EQ(next_budget(5, 2.0), 8u);
  const auto g = budget_grid(1000, 1.3);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(FourierPlan, CostDoublesWithK) {
  const auto train = testing_util::synthetic(SyntheticKind::TwoGaussians, 60, 2, 1);
  const auto test = testing_util::synthetic(SyntheticKind::TwoGaussians, 60, 2, 2);
  FourierSolverConfig cfg;
  cfg.kernel_solver.solver = "sdca";
  cfg.kernel_solver.lambda = 0.01;
  cfg.kernel_solver.iterations = 200;
  const auto rows = fourier_plan(train, test, KernelSpec::gaussian(1.0), {1, 2, 4, 8}, cfg);
  std::vector<std::uint64_t> costs;
  for (const auto& r : rows)
    if (r.method == "fourier") costs.push_back(r.inner_products);
  ASSERT_EQ(costs.size(), 4u);
  for (std::size_t i = 1; i < costs.size(); ++i) EXPECT_EQ(costs[i], 2 * costs[i - 1]);
  EXPECT_EQ(costs[0], 60u);
  EXPECT_GT(rows.size(), 4u);
  std::ostringstream os;
  write_fourier_csv(os, rows);
  EXPECT_EQ(os.str().rfind("method,k,inner_products,test_zero_one\n", 0), 0u);
}

TEST(FourierPlan, Errors) {
  const auto d = testing_util::synthetic(SyntheticKind::TwoGaussians, 10, 2, 1);
  EXPECT_THROW(fourier_plan(d, d, KernelSpec::linear(), {1}, {}), std::invalid_argument);
  EXPECT_THROW(fourier_plan(d, d, KernelSpec::gaussian(1.0), {}, {}), std::invalid_argument);
}

TEST(FourierPlan, ManyFeaturesApproachExactKernel) {
  SyntheticSpec s;
  s.kind = SyntheticKind::XorRing;
  s.n = 300;
  s.dimension = 2;
  s.seed = 3;
  const auto train = generate(s);
  s.seed = 4;
  s.n = 500;
  const auto test = generate(s);
  const KernelSpec kernel = KernelSpec::gaussian(0.1);
  const double lambda = 1.0 / train.size();
  // Exact-kernel reference: a long SDCA run.
  KernelOracle k(kernel);
  const auto [exact, rec] = sdca_train(train, k, {lambda, 100 * train.size(), 1}, {nullptr, 2.0, false, false});
  KernelOracle e(kernel);
  const double exact_err = evaluate(exact, train, test, e).zero_one;
  FourierSolverConfig cfg;
  cfg.lambda = lambda;
  cfg.linear_iterations = 50 * train.size();
  const auto rows = fourier_plan(train, test, kernel, {512}, cfg);
  EXPECT_LE(rows[0].test_zero_one, exact_err + 0.02);
}
