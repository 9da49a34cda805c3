#include "kgard/incremental_factor.hpp"

#include <cmath>
#include <string>

#include "kgard/errors.hpp"

namespace kgard {

IncrementalFactor IncrementalFactor::factorize(const Matrix& m) {
  if (m.rows() != m.cols()) throw ArgumentError("factorize: matrix must be square");
  const Eigen::Index n = m.rows();
  auto l = std::make_shared<Matrix>(Matrix::Zero(n, n));
  Matrix& lo = *l;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - lo.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NumericalError("Cholesky factorization failed: non-positive pivot at index " +
                               std::to_string(j),
                           static_cast<std::size_t>(j));
    }
    const double ljj = std::sqrt(pivot);
    lo(j, j) = ljj;
    if (j + 1 < n) {
      const Eigen::Index rest = n - j - 1;
      lo.col(j).tail(rest) =
          (m.col(j).tail(rest) - lo.bottomLeftCorner(rest, j) * lo.row(j).head(j).transpose()) /
          ljj;
    }
  }
  IncrementalFactor f;
  f.base_ = std::move(l);
  f.n0_ = n;
  return f;
}

bool IncrementalFactor::try_append(const Vector& cross, double diag, double floor) {
  if (static_cast<std::size_t>(cross.size()) != order()) {
    throw ArgumentError("try_append: cross-term length must equal current order");
  }
  Vector d = forward(cross);
  const double b2 = diag - d.squaredNorm();
  if (!(b2 > floor)) return false;
  Vector row(d.size() + 1);
  row.head(d.size()) = d;
  row(d.size()) = std::sqrt(b2);
  rows_.push_back(std::move(row));
  return true;
}

Vector IncrementalFactor::forward(const Vector& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != order()) {
    throw ArgumentError("forward: right-hand side has wrong length");
  }
  Vector q(rhs.size());
  if (n0_ > 0) {
    q.head(n0_) = base_->triangularView<Eigen::Lower>().solve(rhs.head(n0_));
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Eigen::Index idx = n0_ + static_cast<Eigen::Index>(i);
    const Vector& r = rows_[i];
    q(idx) = (rhs(idx) - r.head(idx).dot(q.head(idx))) / r(idx);
  }
  return q;
}

Vector IncrementalFactor::backward(const Vector& q) const {
  if (static_cast<std::size_t>(q.size()) != order()) {
    throw ArgumentError("backward: right-hand side has wrong length");
  }
  Vector z = q;
  // Column-oriented sweep over the appended rows, last to first.
  for (std::size_t i = rows_.size(); i-- > 0;) {
    const Eigen::Index idx = n0_ + static_cast<Eigen::Index>(i);
    const Vector& r = rows_[i];
    z(idx) /= r(idx);
    z.head(idx) -= r.head(idx) * z(idx);
  }
  if (n0_ > 0) {
    z.head(n0_) = base_->transpose().triangularView<Eigen::Upper>().solve(z.head(n0_));
  }
  return z;
}

Matrix IncrementalFactor::lower() const {
  const auto n = static_cast<Eigen::Index>(order());
  Matrix l = Matrix::Zero(n, n);
  if (n0_ > 0) l.topLeftCorner(n0_, n0_) = *base_;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Eigen::Index idx = n0_ + static_cast<Eigen::Index>(i);
    l.row(idx).head(idx + 1) = rows_[i].transpose();
  }
  return l;
}

}  // namespace kgard
