#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgard/kernel.hpp"

namespace kgard {

/// SVD-derived quantities of the initial design X0 = [K 1] (N x (N+1)) with
/// X0 = Q S V^T, Q orthogonal N x N and V the leading N right singular vectors.
struct SpectralDiagnostics {
  Vector singular_values;  // descending
  Vector hat_diag;         // diag of the unregularized hat matrix (pseudoinverse)
  Vector hat_diag_reg;     // diag of X0 (X0^T X0 + lambda I)^-1 X0^T
  Vector g_diag;           // s^2 / (s^2 + lambda)
  Vector phi_diag;         // lambda s / (s^2 + lambda)
  Matrix left_vectors;     // Q
  Matrix right_vectors;    // V, (N+1) x N
  std::size_t rank = 0;
  bool rank_deficient = false;
  double lambda = 0.0;
};

SpectralDiagnostics spectral_diagnostics(const Matrix& gram, double lambda);

/// Largest singular value of [K 1].
double design_sigma_max(const Matrix& gram);

struct BoundReport {
  double sigma_max = 0.0;
  std::optional<double> gamma;
  double lambda_cap = 0.0;
  bool holds = false;
  double min_outlier = 0.0;
  double theta_norm = 0.0;
  double outlier_norm = 0.0;
};

/// Identification certificate for noise-free data y = K alpha + c 1 + u.
/// `true_theta` is (alpha; c) with N+1 entries; `true_outliers` is the full
/// N-vector whose non-zeros form the support T.
BoundReport theorem_check(const Matrix& gram, const Vector& true_theta,
                          const Vector& true_outliers, double lambda);

/// Same, reusing an already computed sigma_max.
BoundReport theorem_check(double sigma_max, const Vector& true_theta,
                          const Vector& true_outliers, double lambda);

struct OracleIntermediates {
  Matrix p_matrix;  // P_k
  Matrix w_matrix;  // W_k
  Vector u_k;
};

struct ResidualOracle {
  Vector residual;
  OracleIntermediates intermediates;
};

/// Closed-form KGARD residual after the outlier columns `selected` have been
/// activated, for the unweighted CoefficientNorm penalty and noise-free data.
ResidualOracle residual_oracle(const Matrix& gram, const Vector& true_theta,
                               const Vector& true_outliers, double lambda,
                               std::span<const std::size_t> selected);

}  // namespace kgard
