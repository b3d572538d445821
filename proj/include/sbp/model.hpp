#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbp/error.hpp"
#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/kernels.hpp"

namespace sbp {

struct SupportTerm {
  std::size_t index = 0;  ///< row in the training set
  double alpha = 0.0;
  Label label = 1;

  friend bool operator==(const SupportTerm&, const SupportTerm&) = default;
};

/// Kernel expansion w = sum_j alpha_j y_j Phi(x_j) over training rows, plus
/// an optional bias. Coefficients refer to the training set by index, so
/// predictions need that dataset.
struct TrainedModel {
  std::string solver;
  std::size_t train_size = 0;
  KernelSpec kernel;
  bool use_bias = false;
  double bias = 0.0;
  std::vector<SupportTerm> support;  ///< ascending index, nonzero alpha
  std::uint64_t kernel_evals = 0;

  std::size_t support_size() const noexcept { return support.size(); }

  /// Keeps the nonzero entries of a dense coefficient vector.
  static TrainedModel from_dense(std::string solver, const Dataset& train, std::span<const double> alpha,
                                 KernelSpec kernel, bool use_bias, double bias,
                                 std::uint64_t kernel_evals) {
    TrainedModel m;
    m.solver = std::move(solver);
    m.train_size = train.size();
    m.kernel = std::move(kernel);
    m.use_bias = use_bias;
    m.bias = bias;
    m.kernel_evals = kernel_evals;
    for (std::size_t i = 0; i < alpha.size(); ++i)
      if (alpha[i] != 0.0) m.support.push_back({i, alpha[i], train.label(i)});
    return m;
  }

  std::vector<double> dense_alpha() const {
    std::vector<double> a(train_size, 0.0);
    for (const auto& s : support) a[s.index] = s.alpha;
    return a;
  }
};

/// sum_j alpha_j y_j K(x_j, x) + b; costs support_size() evaluations.
inline double predict(const TrainedModel& model, const Dataset& train, const SparseExample& x,
                      const KernelOracle& kernel) {
  double score = 0.0;
  for (const auto& s : model.support) score += s.alpha * s.label * kernel(train[s.index], x);
  return score + model.bias;
}

// Text format, one record per line, fields separated by single spaces:
//   sbp-model 1
//   solver NAME
//   n N
//   kernel linear | kernel gaussian SIGMA2 | kernel gram N
//   bias FLAG VALUE
//   kernel_evals COUNT
//   support K
//   INDEX ALPHA Y        (K lines, ascending INDEX)
// Reals use the shortest decimal form that round-trips.

inline void write_model(std::ostream& out, const TrainedModel& m) {
  out << "sbp-model 1\n";
  out << "solver " << m.solver << '\n';
  out << "n " << m.train_size << '\n';
  switch (m.kernel.kind) {
    case KernelKind::Linear: out << "kernel linear\n"; break;
    case KernelKind::Gaussian: out << "kernel gaussian " << format_double(m.kernel.sigma2) << '\n'; break;
    case KernelKind::PrecomputedGram: out << "kernel gram " << m.kernel.gram_size << '\n'; break;
  }
  out << "bias " << (m.use_bias ? 1 : 0) << ' ' << format_double(m.bias) << '\n';
  out << "kernel_evals " << m.kernel_evals << '\n';
  out << "support " << m.support.size() << '\n';
  for (const auto& s : m.support)
    out << s.index << ' ' << format_double(s.alpha) << ' ' << s.label << '\n';
}

inline std::string model_to_string(const TrainedModel& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

inline TrainedModel read_model(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next_fields = [&](std::string_view key) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of model file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (!key.empty() && (fields.empty() || fields[0] != key))
      throw ParseError(line_no, "expected '" + std::string(key) + "'");
    return fields;
  };
  auto need_size = [&](const std::string& text) {
    auto v = parse_integer<std::size_t>(text);
    if (!v) throw ParseError(line_no, "bad integer '" + text + "'");
    return *v;
  };
  auto need_real = [&](const std::string& text) {
    auto v = parse_double(text);
    if (!v) throw ParseError(line_no, "bad number '" + text + "'");
    return *v;
  };

  TrainedModel m;
  auto magic = next_fields("sbp-model");
  if (magic.size() != 2 || magic[1] != "1") throw ParseError(line_no, "unsupported model version");
  auto solver = next_fields("solver");
  if (solver.size() != 2) throw ParseError(line_no, "solver line needs one name");
  m.solver = solver[1];
  auto n = next_fields("n");
  if (n.size() != 2) throw ParseError(line_no, "n line needs one value");
  m.train_size = need_size(n[1]);
  auto kernel = next_fields("kernel");
  if (kernel.size() == 2 && kernel[1] == "linear") {
    m.kernel = KernelSpec::linear();
  } else if (kernel.size() == 3 && kernel[1] == "gaussian") {
    m.kernel = KernelSpec::gaussian(need_real(kernel[2]));
  } else if (kernel.size() == 3 && kernel[1] == "gram") {
    throw ParseError(line_no, "precomputed gram kernels cannot be restored from a model file");
  } else {
    throw ParseError(line_no, "unknown kernel");
  }
  auto bias = next_fields("bias");
  if (bias.size() != 3 || (bias[1] != "0" && bias[1] != "1")) throw ParseError(line_no, "bad bias line");
  m.use_bias = bias[1] == "1";
  m.bias = need_real(bias[2]);
  auto evals = next_fields("kernel_evals");
  if (evals.size() != 2) throw ParseError(line_no, "bad kernel_evals line");
  auto ev = parse_integer<std::uint64_t>(evals[1]);
  if (!ev) throw ParseError(line_no, "bad kernel_evals value");
  m.kernel_evals = *ev;
  auto support = next_fields("support");
  if (support.size() != 2) throw ParseError(line_no, "bad support line");
  const std::size_t count = need_size(support[1]);
  m.support.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto f = next_fields("");
    if (f.size() != 3) throw ParseError(line_no, "support line needs 'index alpha y'");
    SupportTerm term{need_size(f[0]), need_real(f[1]), 0};
    if (f[2] == "1") term.label = 1;
    else if (f[2] == "-1") term.label = -1;
    else throw ParseError(line_no, "label must be 1 or -1");
    if (term.index >= m.train_size) throw ParseError(line_no, "support index out of range");
    if (!m.support.empty() && term.index <= m.support.back().index)
      throw ParseError(line_no, "support indices must be ascending");
    m.support.push_back(term);
  }
  return m;
}

inline TrainedModel model_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_model(is);
}

}  // namespace sbp
