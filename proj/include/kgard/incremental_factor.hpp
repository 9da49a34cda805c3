#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "kgard/kernel.hpp"

namespace kgard {

/// Pivot floor for appending a row: b^2 = diag - ||d||^2 must exceed it.
inline constexpr double kAppendPivotFloor = 1e-12;

/// Lower-triangular Cholesky factor L of a symmetric positive definite
/// matrix that grows by one row/column at a time.
///
/// The leading block is held behind a shared pointer so that many solves can
/// start from the same factorized initial system without copying it; each
/// appended row is stored separately.
class IncrementalFactor {
 public:
  IncrementalFactor() = default;

  /// Dense Cholesky of `m` (lower triangle read). Throws NumericalError with
  /// the offending pivot when `m` is not numerically positive definite.
  static IncrementalFactor factorize(const Matrix& m);

  std::size_t order() const { return static_cast<std::size_t>(n0_) + rows_.size(); }
  std::size_t appended() const { return rows_.size(); }

  /// Appends the row [d^T b] with L d = cross and b = sqrt(diag - ||d||^2).
  /// Returns false (and leaves the factor untouched) when b^2 <= floor.
  bool try_append(const Vector& cross, double diag, double floor = kAppendPivotFloor);

  /// Solves L q = rhs.
  Vector forward(const Vector& rhs) const;
  /// Solves L^T z = q.
  Vector backward(const Vector& q) const;
  /// Solves L L^T z = rhs.
  Vector solve(const Vector& rhs) const { return backward(forward(rhs)); }

  /// Dense copy of L.
  Matrix lower() const;

 private:
  std::shared_ptr<const Matrix> base_;
  Eigen::Index n0_ = 0;
  std::vector<Vector> rows_;  // rows_[i] has length n0_ + i + 1
};

}  // namespace kgard
