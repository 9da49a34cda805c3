#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kgard/incremental_factor.hpp"
#include "kgard/kernel.hpp"

namespace kgard {

/// Which quadratic penalty the ridge step uses.
///  - CoefficientNorm: lambda * ||(alpha; c)||^2, i.e. B = diag(I_N, 1, O_N).
///  - RkhsNorm: lambda * alpha^T K alpha, i.e. B = diag(K, 0, O_N).
enum class RegularizerKind { CoefficientNorm, RkhsNorm };

enum class StopNorm { L2, Linf };

/// Training data: N input points with one observation each.
struct Dataset {
  PointSet inputs;
  Vector targets;

  std::size_t size() const { return inputs.count(); }
  void validate() const;
};

/// Per-iteration threshold, computed from the current residual. When set on
/// KgardConfig it replaces the fixed epsilon.
using EpsilonRule = std::function<double(const Vector& residual)>;

struct KgardConfig {
  double lambda = 0.1;
  double epsilon = 0.0;
  RegularizerKind regularizer = RegularizerKind::CoefficientNorm;
  StopNorm stop_norm = StopNorm::L2;
  /// N+1 positive multipliers: entry i scales the penalty of coefficient i
  /// by w_i^2 (the last entry belongs to the bias).
  std::optional<Vector> tikhonov_weights;
  /// Defaults to floor(N/2).
  std::optional<std::size_t> max_selections;
  EpsilonRule epsilon_rule;

  void validate(std::size_t n) const;
  std::size_t selection_cap(std::size_t n) const;
};

/// Augmented design X = [K 1 I_N] with its regularizer B and the current
/// active column set. Identity columns are never materialized.
///
/// Column indices are zero-based: 0..N-1 kernel, N the bias, N+1+j the
/// identity column e_j.
class DesignSystem {
 public:
  DesignSystem(std::shared_ptr<const Matrix> gram, RegularizerKind kind);

  std::size_t n() const { return static_cast<std::size_t>(gram_->rows()); }
  RegularizerKind regularizer() const { return kind_; }
  const Matrix& gram() const { return *gram_; }
  const std::shared_ptr<const Matrix>& shared_gram() const { return gram_; }

  /// Active columns of X in activation order. Always starts with 0..N.
  std::vector<std::size_t> active_set() const;
  std::size_t active_size() const { return n() + 1 + support_.size(); }
  /// Selected outlier indices into {0..N-1}, in selection order.
  const std::vector<std::size_t>& outlier_support() const { return support_; }
  bool is_selected(std::size_t j) const { return selected_[j] != 0; }

  /// Activates identity column e_j. LogicError if j was already selected.
  void add_outlier(std::size_t j);

  /// Full N x (2N+1) design and (2N+1) x (2N+1) regularizer.
  Matrix dense_design() const;
  Matrix dense_regularizer() const;
  /// X restricted to the active columns.
  Matrix active_design() const;
  /// lambda * B restricted to the active set, with optional Tikhonov weights.
  Matrix active_penalty(double lambda, const std::optional<Vector>& weights) const;

  /// X z for a full-length z = (alpha; c; u).
  Vector apply(const Vector& z) const;
  /// X_S z_S for a coefficient vector over the active set.
  Vector apply_active(const Vector& z) const;

  /// Normal matrix X_S^T X_S + lambda B_S and right-hand side X_S^T y.
  Matrix normal_matrix(double lambda, const std::optional<Vector>& weights) const;
  Vector normal_rhs(const Vector& y) const;

  /// J(z) = ||y - X_S z||^2 + z^T (lambda B_S) z.
  double objective(const Vector& z, const Vector& y, double lambda,
                   const std::optional<Vector>& weights) const;

 private:
  std::shared_ptr<const Matrix> gram_;
  RegularizerKind kind_;
  std::vector<std::size_t> support_;
  std::vector<char> selected_;
};

DesignSystem build_design(const Matrix& gram, RegularizerKind kind);

/// Unique minimizer of J over the current active set, solved from scratch.
Vector regularized_ls_solve(const DesignSystem& system, const Vector& y, double lambda,
                            const std::optional<Vector>& weights = std::nullopt);

struct FactoredSolve {
  IncrementalFactor factor;
  Vector z;
};

/// Factorizes M_0 = X_0^T X_0 + lambda B_0 and solves for z_0.
FactoredSolve chol_init(const DesignSystem& system, double lambda, const Vector& y,
                        const std::optional<Vector>& weights = std::nullopt);

/// Activates e_j in `system`, grows `factor` by one row (refactorizing M_k
/// from scratch if the new pivot collapses) and returns z_k.
Vector chol_extend(IncrementalFactor& factor, DesignSystem& system, std::size_t j,
                   double lambda, const Vector& y,
                   const std::optional<Vector>& weights = std::nullopt);

/// argmax_{j in inactive} |r_j|; ties go to the smallest index.
std::size_t select_index(std::span<const double> residual,
                         std::span<const std::size_t> inactive);

struct KgardSolution {
  Vector alpha;
  double bias = 0.0;
  /// (index, value) pairs in selection order.
  std::vector<std::pair<std::size_t, double>> outliers;
  std::size_t iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> objective_history;
  Vector residual;
  /// Threshold in force when the loop ended.
  double final_epsilon = 0.0;
  /// Stopped at max_selections with the threshold still exceeded.
  bool truncated = false;
  std::size_t refactorizations = 0;

  std::vector<std::size_t> support() const;
  Vector outlier_vector(std::size_t n) const;
};

/// KGARD with a fixed Gram matrix and configuration. The initial system is
/// factorized once; every `fit` extends a copy of that factor.
class KgardModel {
 public:
  KgardModel(std::shared_ptr<const Matrix> gram, KgardConfig config);
  KgardModel(const Matrix& gram, KgardConfig config)
      : KgardModel(std::make_shared<const Matrix>(gram), std::move(config)) {}

  KgardSolution fit(const Vector& y) const;

  std::size_t n() const { return static_cast<std::size_t>(gram_->rows()); }
  const Matrix& gram() const { return *gram_; }
  const KgardConfig& config() const { return config_; }

 private:
  std::shared_ptr<const Matrix> gram_;
  KgardConfig config_;
  IncrementalFactor initial_;
};

KgardSolution kgard_fit(const Dataset& data, const KernelParams& params,
                        const KgardConfig& config);

/// f(q) = sum_j alpha_j kappa(q, x_j) + c for every query point.
Vector predict(const KgardSolution& solution, const PointSet& train_points,
               const PointSet& query_points, const KernelParams& params);

/// K alpha + c 1 on the training points themselves.
Vector fitted_values(const Matrix& gram, const KgardSolution& solution);

double stop_norm_value(const Vector& r, StopNorm norm);

}  // namespace kgard
