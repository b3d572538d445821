#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sbp/data.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "sbp_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    sbp::SyntheticSpec s;
    s.n = 80;
    s.noise_rate = 0.05;
    std::ofstream(p / "train.svm") << sbp::libsvm_string(sbp::generate(s));
    s.seed = 2;
    std::ofstream(p / "test.svm") << sbp::libsvm_string(sbp::generate(s));
    std::ofstream(p / "bad.svm") << "1 1:1\n-1 2:x\n";
    std::ofstream(p / "plan.txt") << "train = train.svm\ntest = test.svm\nkernel = gaussian:1\n"
                                     "solvers = sbp,pegasos\nlambda = 0.02\nepochs = 2\nrepeat = 2\n";
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(SBP_CLI) + " " + args + " > " + (workdir() / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string w(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST(Cli, TrainWritesModelAndRunAndIsReproducible) {
  const std::string common = "train " + w("train.svm") + " --solver sbp --kernel gaussian:1 --nu 0.1 --iters 300 --seed 4 --test " +
                             w("test.svm") + " --out ";
  ASSERT_EQ(run(common + w("t1")), 0);
  ASSERT_EQ(run(common + w("t2")), 0);
  for (const char* f : {"model.txt", "run.csv"}) {
    ASSERT_TRUE(fs::exists(workdir() / "t1" / f));
    EXPECT_EQ(slurp(workdir() / "t1" / f), slurp(workdir() / "t2" / f));
  }
  EXPECT_NE(slurp(workdir() / "t1" / "model.txt").find("kernel_evals 24080\n"), std::string::npos);
}

TEST(Cli, OtherSolversAndBias) {
  EXPECT_EQ(run("train " + w("train.svm") + " --solver pegasos --lambda 0.05 --iters 200 --out " + w("p")), 0);
  EXPECT_EQ(run("train " + w("train.svm") + " --solver sdca --lambda 0.05 --iters 200 --out " + w("s")), 0);
  EXPECT_EQ(run("train " + w("train.svm") + " --solver perceptron --iters 1 --out " + w("q")), 0);
  EXPECT_EQ(run("train " + w("train.svm") + " --solver sbp --nu 0.1 --bias --iters 100 --out " + w("b")), 0);
  EXPECT_NE(slurp(workdir() / "b" / "model.txt").find("bias 1 "), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("train"), 2);
  EXPECT_EQ(run(w("train.svm")), 2);
  EXPECT_EQ(run("train " + w("train.svm") + " --solver smo"), 2);
  EXPECT_EQ(run("train " + w("train.svm") + " --solver sbp"), 2);  // --nu missing
  EXPECT_EQ(run("train " + w("train.svm") + " --solver sbp --nu 0.1 --kernel poly"), 2);
  EXPECT_EQ(run("train " + w("missing.svm") + " --nu 0.1"), 3);
  EXPECT_EQ(run("train " + w("bad.svm") + " --nu 0.1"), 3);
  EXPECT_EQ(run("train " + w("train.svm") + " --nu 0.1 --positive-class 5"), 3);
  // Linear kernel, no slack, opposite labels on one point: no positive margin.
  std::ofstream(workdir() / "clash.svm") << "1 1:1\n-1 1:1\n";
  EXPECT_EQ(run("train " + w("clash.svm") + " --kernel linear --nu 0 --iters 10 --out " + w("c")), 4);
  EXPECT_EQ(run("calibrate-nu " + w("train.svm")), 2);
  EXPECT_EQ(run("fourier " + w("train.svm") + " --kernel linear --test " + w("test.svm")), 2);
  EXPECT_EQ(run("bench " + w("missing_plan.txt")), 3);
}

TEST(Cli, CalibrateFourierBench) {
  EXPECT_EQ(run("calibrate-nu " + w("train.svm") + " --lambda 0.02"), 0);
  EXPECT_EQ(slurp(workdir() / "stdout.txt").rfind("nu ", 0), 0u);
  EXPECT_EQ(run("fourier " + w("train.svm") + " --test " + w("test.svm") + " --k-list 1,2,4 --out " + w("f")), 0);
  EXPECT_TRUE(fs::exists(workdir() / "f" / "fourier.csv"));
  ASSERT_EQ(run("bench " + w("plan.txt") + " --out " + w("b1")), 0);
  ASSERT_EQ(run("bench " + w("plan.txt") + " --out " + w("b2")), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(workdir() / "b1")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(workdir() / "b2" / e.path().filename()));
  }
  EXPECT_EQ(files, 5u);  // 2 solvers x 2 seeds + aggregate
}
