#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgard {

/// Invalid argument: bad dimensions, out-of-range parameters.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Violated algorithmic precondition (e.g. reselecting an outlier column).
class LogicError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Factorization breakdown. `pivot()` is the zero-based row where the
/// Cholesky pivot became non-positive.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Malformed input file; `offset()` is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace kgard
