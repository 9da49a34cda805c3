#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kgard {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Gaussian RBF width. kappa(x, x') = exp(-||x - x'||^2 / sigma^2).
struct KernelParams {
  double sigma = 1.0;

  void validate() const;
};

/// An ordered set of N points in R^d, stored one point per row.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(Matrix coords);
  /// One-dimensional convenience constructor.
  static PointSet from_scalars(std::span<const double> xs);

  std::size_t count() const { return static_cast<std::size_t>(coords_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(coords_.cols()); }
  auto point(std::size_t i) const { return coords_.row(static_cast<Eigen::Index>(i)); }
  const Matrix& coords() const { return coords_; }

  /// Subset by row indices (order preserved).
  PointSet select(std::span<const std::size_t> rows) const;

 private:
  Matrix coords_;
};

double rbf_eval(std::span<const double> a, std::span<const double> b,
                const KernelParams& params);
double rbf_eval(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b,
                const KernelParams& params);

/// K_ij = kappa(x_i, x_j). Symmetric with unit diagonal.
Matrix gram_matrix(const PointSet& pts, const KernelParams& params);

/// C_ij = kappa(q_i, x_j), the evaluation matrix of queries against centers.
Matrix cross_gram(const PointSet& queries, const PointSet& centers,
                  const KernelParams& params);

}  // namespace kgard
