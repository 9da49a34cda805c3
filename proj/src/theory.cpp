#include "kgard/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kgard/errors.hpp"

namespace kgard {

namespace {

Matrix initial_design(const Matrix& gram) {
  if (gram.rows() == 0 || gram.rows() != gram.cols()) {
    throw ArgumentError("Gram matrix must be square and non-empty");
  }
  Matrix x0(gram.rows(), gram.cols() + 1);
  x0.leftCols(gram.cols()) = gram;
  x0.col(gram.cols()).setOnes();
  return x0;
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be positive and finite");
  }
}

}  // namespace

SpectralDiagnostics spectral_diagnostics(const Matrix& gram, double lambda) {
  check_lambda(lambda);
  const Matrix x0 = initial_design(gram);
  const Eigen::BDCSVD<Matrix> svd(x0, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const Eigen::Index n = x0.rows();

  SpectralDiagnostics d;
  d.lambda = lambda;
  d.singular_values = svd.singularValues();
  d.left_vectors = svd.matrixU();
  d.right_vectors = svd.matrixV();

  const Vector s2 = d.singular_values.array().square();
  d.g_diag = (s2.array() / (s2.array() + lambda)).matrix();
  d.phi_diag = (lambda * d.singular_values.array() / (s2.array() + lambda)).matrix();

  const double tol = static_cast<double>(x0.cols()) * d.singular_values(0) *
                     std::numeric_limits<double>::epsilon();
  Vector mask(n);
  for (Eigen::Index i = 0; i < n; ++i) mask(i) = d.singular_values(i) > tol ? 1.0 : 0.0;
  d.rank = static_cast<std::size_t>(mask.sum());
  d.rank_deficient = d.rank < static_cast<std::size_t>(n);

  const Matrix q2 = d.left_vectors.array().square();
  d.hat_diag = q2 * mask;
  d.hat_diag_reg = q2 * d.g_diag;
  return d;
}

double design_sigma_max(const Matrix& gram) {
  const Eigen::BDCSVD<Matrix> svd(initial_design(gram));
  return svd.singularValues()(0);
}

BoundReport theorem_check(const Matrix& gram, const Vector& true_theta,
                          const Vector& true_outliers, double lambda) {
  if (true_theta.size() != gram.rows() + 1) {
    throw ArgumentError("true_theta must have N+1 entries");
  }
  if (true_outliers.size() != gram.rows()) {
    throw ArgumentError("true_outliers must have N entries");
  }
  return theorem_check(design_sigma_max(gram), true_theta, true_outliers, lambda);
}

BoundReport theorem_check(double sigma_max, const Vector& true_theta,
                          const Vector& true_outliers, double lambda) {
  check_lambda(lambda);
  BoundReport rep;
  rep.sigma_max = sigma_max;
  rep.theta_norm = true_theta.norm();
  rep.outlier_norm = true_outliers.norm();

  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < true_outliers.size(); ++i) {
    if (true_outliers(i) != 0.0) m = std::min(m, std::abs(true_outliers(i)));
  }
  if (!std::isfinite(m)) throw ArgumentError("theorem_check: outlier support is empty");
  rep.min_outlier = m;
  rep.lambda_cap = rep.theta_norm > 0.0
                       ? 0.5 * (m / rep.theta_norm) * (m / rep.theta_norm)
                       : std::numeric_limits<double>::infinity();

  const double slack = m - std::sqrt(2.0 * lambda) * rep.theta_norm;
  if (slack > 0.0) {
    rep.gamma = std::sqrt(slack / (2.0 * rep.outlier_norm - slack));
    rep.holds = sigma_max < *rep.gamma * std::sqrt(lambda);
  }
  return rep;
}

ResidualOracle residual_oracle(const Matrix& gram, const Vector& true_theta,
                               const Vector& true_outliers, double lambda,
                               std::span<const std::size_t> selected) {
  const Eigen::Index n = gram.rows();
  if (true_theta.size() != n + 1) throw ArgumentError("true_theta must have N+1 entries");
  if (true_outliers.size() != n) throw ArgumentError("true_outliers must have N entries");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t j : selected) {
    if (j >= static_cast<std::size_t>(n)) throw ArgumentError("selected index out of range");
    if (seen[j]) throw ArgumentError("selected indices must be distinct");
    if (true_outliers(static_cast<Eigen::Index>(j)) == 0.0) {
      throw ArgumentError("selected index " + std::to_string(j) + " is outside the outlier support");
    }
    seen[j] = 1;
  }

  const SpectralDiagnostics d = spectral_diagnostics(gram, lambda);
  const Matrix& q = d.left_vectors;
  const Matrix hg = q * d.g_diag.asDiagonal() * q.transpose();  // Q G Q^T
  const auto k = static_cast<Eigen::Index>(selected.size());

  // A = I_S W^-1 I_S^T, W = I_k - I_S^T Q G Q^T I_S.
  Matrix w = Matrix::Identity(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      w(a, b) -= hg(static_cast<Eigen::Index>(selected[a]), static_cast<Eigen::Index>(selected[b]));
    }
  }
  Matrix a_mat = Matrix::Zero(n, n);
  if (k > 0) {
    const Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("residual_oracle: W is not positive definite", 0);
    }
    const Matrix w_inv = llt.solve(Matrix::Identity(k, k));
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        a_mat(static_cast<Eigen::Index>(selected[a]), static_cast<Eigen::Index>(selected[b])) =
            w_inv(a, b);
      }
    }
  }

  ResidualOracle out;
  auto& im = out.intermediates;
  im.w_matrix = w;
  im.p_matrix = Matrix::Identity(n, n) + hg * a_mat - a_mat;

  Vector u_rest = true_outliers;
  for (std::size_t j : selected) u_rest(static_cast<Eigen::Index>(j)) = 0.0;
  im.u_k = u_rest + a_mat * (hg * u_rest);

  // Q F V^T theta with F = [diag(phi) 0].
  const Vector qfv = q * (d.phi_diag.asDiagonal() * (d.right_vectors.transpose() * true_theta));
  out.residual = im.u_k + im.p_matrix * qfv - hg * im.u_k;
  return out;
}

}  // namespace kgard
