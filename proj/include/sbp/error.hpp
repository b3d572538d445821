#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbp {

/// Malformed or unusable input data (parse failures, infeasible generators).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure tied to a 1-based line of the source text.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A solver ran but could not produce a usable model.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sbp
