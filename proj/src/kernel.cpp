#include "kgard/kernel.hpp"

#include <cmath>
#include <string>

#include "kgard/errors.hpp"

namespace kgard {

void KernelParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("kernel width sigma must be positive and finite");
  }
}

PointSet::PointSet(Matrix coords) : coords_(std::move(coords)) {
  if (coords_.rows() > 0 && coords_.cols() == 0) {
    throw ArgumentError("points must have dimension >= 1");
  }
}

PointSet PointSet::from_scalars(std::span<const double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = xs[i];
  return PointSet(std::move(m));
}

PointSet PointSet::select(std::span<const std::size_t> rows) const {
  Matrix m(static_cast<Eigen::Index>(rows.size()), coords_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= count()) throw ArgumentError("point index out of range");
    m.row(static_cast<Eigen::Index>(i)) = coords_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return PointSet(std::move(m));
}

double rbf_eval(std::span<const double> a, std::span<const double> b,
                const KernelParams& params) {
  params.validate();
  if (a.size() != b.size()) {
    throw ArgumentError("rbf_eval: dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-d2 / (params.sigma * params.sigma));
}

double rbf_eval(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b,
                const KernelParams& params) {
  return rbf_eval(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                  std::span<const double>(b.data(), static_cast<std::size_t>(b.size())),
                  params);
}

namespace {

// Exact squared distances; no ||a||^2 + ||b||^2 - 2ab shortcut, which loses
// digits for nearby points.
Matrix rbf_block(const Matrix& rows, const Matrix& cols, double sigma) {
  const double inv = 1.0 / (sigma * sigma);
  Matrix out(rows.rows(), cols.rows());
  for (Eigen::Index j = 0; j < cols.rows(); ++j) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      out(i, j) = std::exp(-(rows.row(i) - cols.row(j)).squaredNorm() * inv);
    }
  }
  return out;
}

}  // namespace

Matrix gram_matrix(const PointSet& pts, const KernelParams& params) {
  params.validate();
  if (pts.count() == 0) throw ArgumentError("gram_matrix: empty point set");
  const auto n = static_cast<Eigen::Index>(pts.count());
  const double inv = 1.0 / (params.sigma * params.sigma);
  const Matrix& x = pts.coords();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-(x.row(i) - x.row(j)).squaredNorm() * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix cross_gram(const PointSet& queries, const PointSet& centers,
                  const KernelParams& params) {
  params.validate();
  if (queries.count() > 0 && centers.count() > 0 && queries.dim() != centers.dim()) {
    throw ArgumentError("cross_gram: dimension mismatch between queries and centers");
  }
  return rbf_block(queries.coords(), centers.coords(), params.sigma);
}

}  // namespace kgard
