#include "kgard/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kgard/errors.hpp"

namespace kgard {

void Dataset::validate() const {
  if (inputs.count() == 0) throw ArgumentError("dataset is empty");
  if (static_cast<std::size_t>(targets.size()) != inputs.count()) {
    throw ArgumentError("dataset: " + std::to_string(inputs.count()) + " points but " +
                        std::to_string(targets.size()) + " targets");
  }
}

void KgardConfig::validate(std::size_t n) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be positive and finite");
  }
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be non-negative");
  if (tikhonov_weights) {
    if (static_cast<std::size_t>(tikhonov_weights->size()) != n + 1) {
      throw ArgumentError("tikhonov_weights must have N+1 entries");
    }
    if (!(tikhonov_weights->array() > 0.0).all()) {
      throw ArgumentError("tikhonov_weights must be positive");
    }
  }
  if (max_selections && *max_selections > n) {
    throw ArgumentError("max_selections must not exceed N");
  }
}

std::size_t KgardConfig::selection_cap(std::size_t n) const {
  return max_selections.value_or(n / 2);
}

// ---------------------------------------------------------------------------
// DesignSystem

DesignSystem::DesignSystem(std::shared_ptr<const Matrix> gram, RegularizerKind kind)
    : gram_(std::move(gram)), kind_(kind) {
  if (!gram_ || gram_->rows() != gram_->cols() || gram_->rows() == 0) {
    throw ArgumentError("design: Gram matrix must be square and non-empty");
  }
  selected_.assign(n(), 0);
}

DesignSystem build_design(const Matrix& gram, RegularizerKind kind) {
  return DesignSystem(std::make_shared<const Matrix>(gram), kind);
}

std::vector<std::size_t> DesignSystem::active_set() const {
  std::vector<std::size_t> out(n() + 1);
  for (std::size_t i = 0; i <= n(); ++i) out[i] = i;
  for (std::size_t j : support_) out.push_back(n() + 1 + j);
  return out;
}

void DesignSystem::add_outlier(std::size_t j) {
  if (j >= n()) throw ArgumentError("outlier index out of range");
  if (selected_[j]) {
    throw LogicError("outlier column " + std::to_string(j) + " is already active");
  }
  selected_[j] = 1;
  support_.push_back(j);
}

Matrix DesignSystem::dense_design() const {
  const auto nn = static_cast<Eigen::Index>(n());
  Matrix x = Matrix::Zero(nn, 2 * nn + 1);
  x.leftCols(nn) = *gram_;
  x.col(nn).setOnes();
  x.rightCols(nn).setIdentity();
  return x;
}

Matrix DesignSystem::dense_regularizer() const {
  const auto nn = static_cast<Eigen::Index>(n());
  Matrix b = Matrix::Zero(2 * nn + 1, 2 * nn + 1);
  if (kind_ == RegularizerKind::CoefficientNorm) {
    b.topLeftCorner(nn + 1, nn + 1).setIdentity();
  } else {
    b.topLeftCorner(nn, nn) = *gram_;
  }
  return b;
}

Matrix DesignSystem::active_design() const {
  const auto nn = static_cast<Eigen::Index>(n());
  Matrix x = Matrix::Zero(nn, static_cast<Eigen::Index>(active_size()));
  x.leftCols(nn) = *gram_;
  x.col(nn).setOnes();
  for (std::size_t s = 0; s < support_.size(); ++s) {
    x(static_cast<Eigen::Index>(support_[s]), nn + 1 + static_cast<Eigen::Index>(s)) = 1.0;
  }
  return x;
}

Matrix DesignSystem::active_penalty(double lambda, const std::optional<Vector>& weights) const {
  const auto nn = static_cast<Eigen::Index>(n());
  const auto m = static_cast<Eigen::Index>(active_size());
  Matrix p = Matrix::Zero(m, m);
  if (kind_ == RegularizerKind::CoefficientNorm) {
    for (Eigen::Index i = 0; i <= nn; ++i) {
      const double w = weights ? (*weights)(i) : 1.0;
      p(i, i) = lambda * w * w;
    }
  } else {
    if (weights) {
      const auto w = weights->head(nn);
      p.topLeftCorner(nn, nn) = lambda * (w.asDiagonal() * (*gram_) * w.asDiagonal());
    } else {
      p.topLeftCorner(nn, nn) = lambda * (*gram_);
    }
  }
  return p;
}

Vector DesignSystem::apply(const Vector& z) const {
  const auto nn = static_cast<Eigen::Index>(n());
  if (z.size() != 2 * nn + 1) throw ArgumentError("apply: z must have 2N+1 entries");
  return (*gram_) * z.head(nn) + Vector::Constant(nn, z(nn)) + z.tail(nn);
}

Vector DesignSystem::apply_active(const Vector& z) const {
  const auto nn = static_cast<Eigen::Index>(n());
  if (static_cast<std::size_t>(z.size()) != active_size()) {
    throw ArgumentError("apply_active: coefficient vector does not match the active set");
  }
  Vector out = (*gram_) * z.head(nn) + Vector::Constant(nn, z(nn));
  for (std::size_t s = 0; s < support_.size(); ++s) {
    out(static_cast<Eigen::Index>(support_[s])) += z(nn + 1 + static_cast<Eigen::Index>(s));
  }
  return out;
}

Matrix DesignSystem::normal_matrix(double lambda, const std::optional<Vector>& weights) const {
  const auto nn = static_cast<Eigen::Index>(n());
  const auto k = static_cast<Eigen::Index>(support_.size());
  const Matrix& g = *gram_;
  Matrix m(nn + 1 + k, nn + 1 + k);
  m.topLeftCorner(nn, nn).noalias() = g.transpose() * g;
  const Vector colsum = g.colwise().sum().transpose();
  m.block(0, nn, nn, 1) = colsum;
  m.block(nn, 0, 1, nn) = colsum.transpose();
  m(nn, nn) = static_cast<double>(nn);
  for (Eigen::Index s = 0; s < k; ++s) {
    const auto j = static_cast<Eigen::Index>(support_[static_cast<std::size_t>(s)]);
    m.block(0, nn + 1 + s, nn, 1) = g.row(j).transpose();
    m.block(nn + 1 + s, 0, 1, nn) = g.row(j);
    m(nn, nn + 1 + s) = 1.0;
    m(nn + 1 + s, nn) = 1.0;
  }
  m.bottomRightCorner(k, k).setIdentity();
  m += active_penalty(lambda, weights);
  return m;
}

Vector DesignSystem::normal_rhs(const Vector& y) const {
  const auto nn = static_cast<Eigen::Index>(n());
  if (y.size() != nn) throw ArgumentError("observation vector must have N entries");
  Vector b(static_cast<Eigen::Index>(active_size()));
  b.head(nn).noalias() = gram_->transpose() * y;
  b(nn) = y.sum();
  for (std::size_t s = 0; s < support_.size(); ++s) {
    b(nn + 1 + static_cast<Eigen::Index>(s)) = y(static_cast<Eigen::Index>(support_[s]));
  }
  return b;
}

double DesignSystem::objective(const Vector& z, const Vector& y, double lambda,
                               const std::optional<Vector>& weights) const {
  const Vector r = y - apply_active(z);
  return r.squaredNorm() + z.dot(active_penalty(lambda, weights) * z);
}

// ---------------------------------------------------------------------------
// Solves

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be positive and finite");
  }
}

}  // namespace

Vector regularized_ls_solve(const DesignSystem& system, const Vector& y, double lambda,
                            const std::optional<Vector>& weights) {
  check_lambda(lambda);
  const IncrementalFactor f = IncrementalFactor::factorize(system.normal_matrix(lambda, weights));
  return f.solve(system.normal_rhs(y));
}

FactoredSolve chol_init(const DesignSystem& system, double lambda, const Vector& y,
                        const std::optional<Vector>& weights) {
  check_lambda(lambda);
  FactoredSolve out;
  out.factor = IncrementalFactor::factorize(system.normal_matrix(lambda, weights));
  out.z = out.factor.solve(system.normal_rhs(y));
  return out;
}

Vector chol_extend(IncrementalFactor& factor, DesignSystem& system, std::size_t j,
                   double lambda, const Vector& y, const std::optional<Vector>& weights) {
  check_lambda(lambda);
  if (factor.order() != system.active_size()) {
    throw LogicError("chol_extend: factor does not match the active set");
  }
  if (j >= system.n()) throw ArgumentError("chol_extend: index out of range");
  if (system.is_selected(j)) {
    throw LogicError("chol_extend: column " + std::to_string(j) + " is already active");
  }
  const auto nn = static_cast<Eigen::Index>(system.n());
  // X_{k-1}^T e_j: the j-th Gram row, a one for the bias, zeros against the
  // other (distinct) identity columns. B contributes nothing to the new row.
  Vector cross = Vector::Zero(static_cast<Eigen::Index>(factor.order()));
  cross.head(nn) = system.gram().row(static_cast<Eigen::Index>(j)).transpose();
  cross(nn) = 1.0;
  const bool appended = factor.try_append(cross, 1.0);
  system.add_outlier(j);
  if (!appended) {
    factor = IncrementalFactor::factorize(system.normal_matrix(lambda, weights));
  }
  return factor.solve(system.normal_rhs(y));
}

std::size_t select_index(std::span<const double> residual,
                         std::span<const std::size_t> inactive) {
  if (inactive.empty()) throw LogicError("select_index: no inactive index left");
  std::size_t best = inactive.front();
  double best_abs = -1.0;
  for (std::size_t j : inactive) {
    if (j >= residual.size()) throw ArgumentError("select_index: index out of range");
    const double a = std::abs(residual[j]);
    if (a > best_abs || (a == best_abs && j < best)) {
      best = j;
      best_abs = a;
    }
  }
  return best;
}

double stop_norm_value(const Vector& r, StopNorm norm) {
  if (r.size() == 0) return 0.0;
  return norm == StopNorm::L2 ? r.norm() : r.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// KGARD

std::vector<std::size_t> KgardSolution::support() const {
  std::vector<std::size_t> s;
  s.reserve(outliers.size());
  for (const auto& [j, v] : outliers) s.push_back(j);
  return s;
}

Vector KgardSolution::outlier_vector(std::size_t n) const {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(n));
  for (const auto& [j, v] : outliers) u(static_cast<Eigen::Index>(j)) = v;
  return u;
}

KgardModel::KgardModel(std::shared_ptr<const Matrix> gram, KgardConfig config)
    : gram_(std::move(gram)), config_(std::move(config)) {
  if (!gram_ || gram_->rows() != gram_->cols() || gram_->rows() == 0) {
    throw ArgumentError("KgardModel: Gram matrix must be square and non-empty");
  }
  config_.validate(n());
  const DesignSystem initial(gram_, config_.regularizer);
  initial_ = IncrementalFactor::factorize(
      initial.normal_matrix(config_.lambda, config_.tikhonov_weights));
}

KgardSolution KgardModel::fit(const Vector& y) const {
  const std::size_t n = this->n();
  const auto nn = static_cast<Eigen::Index>(n);
  if (static_cast<std::size_t>(y.size()) != n) {
    throw ArgumentError("fit: expected " + std::to_string(n) + " observations");
  }
  const double lambda = config_.lambda;
  const auto& weights = config_.tikhonov_weights;
  const std::size_t cap = config_.selection_cap(n);

  DesignSystem system(gram_, config_.regularizer);
  IncrementalFactor factor = initial_;
  Vector z = factor.solve(system.normal_rhs(y));

  KgardSolution sol;
  auto residual_of = [&](const Vector& coeffs) { return Vector(y - system.apply_active(coeffs)); };
  auto threshold_of = [&](const Vector& r) {
    return config_.epsilon_rule ? config_.epsilon_rule(r) : config_.epsilon;
  };
  auto objective_of = [&](const Vector& coeffs, const Vector& r) {
    return r.squaredNorm() + coeffs.dot(system.active_penalty(lambda, weights) * coeffs);
  };

  Vector r = residual_of(z);
  double norm = stop_norm_value(r, config_.stop_norm);
  double eps = threshold_of(r);
  sol.residual_history.push_back(norm);
  sol.objective_history.push_back(objective_of(z, r));

  std::vector<double> masked(n);
  while (norm > eps) {
    if (system.outlier_support().size() >= cap) {
      sol.truncated = true;
      break;
    }
    // Selected coordinates are excluded by masking them below any |r_j|.
    for (std::size_t i = 0; i < n; ++i) {
      masked[i] = system.is_selected(i) ? -1.0 : std::abs(r(static_cast<Eigen::Index>(i)));
    }
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (masked[i] > masked[j]) j = i;
    }
    const std::size_t before = factor.appended();
    z = chol_extend(factor, system, j, lambda, y, weights);
    if (factor.appended() != before + 1) ++sol.refactorizations;

    r = residual_of(z);
    norm = stop_norm_value(r, config_.stop_norm);
    eps = threshold_of(r);
    sol.residual_history.push_back(norm);
    sol.objective_history.push_back(objective_of(z, r));
  }

  sol.iterations = system.outlier_support().size();
  sol.alpha = z.head(nn);
  sol.bias = z(nn);
  const auto& support = system.outlier_support();
  sol.outliers.reserve(support.size());
  for (std::size_t s = 0; s < support.size(); ++s) {
    sol.outliers.emplace_back(support[s], z(nn + 1 + static_cast<Eigen::Index>(s)));
  }
  sol.residual = std::move(r);
  sol.final_epsilon = eps;
  return sol;
}

KgardSolution kgard_fit(const Dataset& data, const KernelParams& params,
                        const KgardConfig& config) {
  data.validate();
  const KgardModel model(gram_matrix(data.inputs, params), config);
  return model.fit(data.targets);
}

Vector predict(const KgardSolution& solution, const PointSet& train_points,
               const PointSet& query_points, const KernelParams& params) {
  if (static_cast<std::size_t>(solution.alpha.size()) != train_points.count()) {
    throw ArgumentError("predict: solution was not produced on these training points");
  }
  if (query_points.count() == 0) return Vector();
  if (query_points.dim() != train_points.dim()) {
    throw ArgumentError("predict: query dimension does not match training dimension");
  }
  const Matrix c = cross_gram(query_points, train_points, params);
  return c * solution.alpha + Vector::Constant(c.rows(), solution.bias);
}

Vector fitted_values(const Matrix& gram, const KgardSolution& solution) {
  return gram * solution.alpha + Vector::Constant(gram.rows(), solution.bias);
}

}  // namespace kgard
