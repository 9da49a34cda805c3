#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "instances.hpp"
#include "kgard/errors.hpp"
#include "kgard/experiments.hpp"
#include "kgard/solver.hpp"
#include "oracles.hpp"

using namespace kgard;
using testing::dense_active_design;
using testing::dense_coef_penalty;
using testing::dense_ridge;

namespace {

std::shared_ptr<const Matrix> random_gram(SeededRng& rng, std::size_t n, double sigma = 0.2) {
  return std::make_shared<const Matrix>(
      gram_matrix(testing::random_points(rng, n, 1), KernelParams{sigma}));
}

}  // namespace

TEST_CASE("design system bookkeeping") {
  SeededRng rng(1);
  DesignSystem s(random_gram(rng, 6), RegularizerKind::CoefficientNorm);
  CHECK(s.active_size() == 7);
  CHECK(s.active_set().size() == 7);
  s.add_outlier(4);
  s.add_outlier(1);
  const auto act = s.active_set();
  REQUIRE(act.size() == 9);
  CHECK(act[7] == 6 + 1 + 4);
  CHECK(act[8] == 6 + 1 + 1);
  CHECK(s.is_selected(4));
  CHECK_FALSE(s.is_selected(0));
  CHECK_THROWS_AS(s.add_outlier(4), LogicError);
  CHECK_THROWS_AS(s.add_outlier(6), ArgumentError);

  // The active design is the dense design restricted to the active columns.
  const Matrix full = s.dense_design();
  const Matrix act_x = s.active_design();
  for (std::size_t c = 0; c < act.size(); ++c) {
    CHECK(act_x.col(static_cast<Eigen::Index>(c)) == full.col(static_cast<Eigen::Index>(act[c])));
  }
  const Matrix b = s.dense_regularizer();
  CHECK(b.topLeftCorner(7, 7) == Matrix::Identity(7, 7));
  CHECK(b.bottomRightCorner(6, 6).isZero());
}

TEST_CASE("normal equations agree with the dense definition") {
  SeededRng rng(2);
  for (auto kind : {RegularizerKind::CoefficientNorm, RegularizerKind::RkhsNorm}) {
    DesignSystem s(random_gram(rng, 10), kind);
    s.add_outlier(3);
    s.add_outlier(7);
    const Vector w = (testing::random_vector(rng, 11).array().abs() + 0.5).matrix();
    const Matrix x = s.active_design();
    const Matrix p = s.active_penalty(0.3, w);
    CHECK((s.normal_matrix(0.3, w) - (x.transpose() * x + p)).norm() < 1e-12);
    const Vector y = testing::random_vector(rng, 10);
    CHECK((s.normal_rhs(y) - x.transpose() * y).norm() < 1e-12);

    Vector z = testing::random_vector(rng, s.active_size());
    CHECK((s.apply_active(z) - x * z).norm() < 1e-12);
    CHECK(s.objective(z, y, 0.3, w) ==
          doctest::Approx((y - x * z).squaredNorm() + z.dot(p * z)).epsilon(1e-12));
  }
}

TEST_CASE("RKHS penalty is lambda alpha^T K alpha") {
  SeededRng rng(3);
  auto k = random_gram(rng, 8);
  const DesignSystem s(k, RegularizerKind::RkhsNorm);
  const Matrix p = s.active_penalty(2.0, std::nullopt);
  CHECK((p.topLeftCorner(8, 8) - 2.0 * (*k)).norm() < 1e-14);
  CHECK(p(8, 8) == 0.0);
  const Vector full_z = testing::random_vector(rng, 17);
  CHECK((s.apply(full_z) - s.dense_design() * full_z).norm() < 1e-12);
}

TEST_CASE("regularized_ls_solve satisfies the optimality conditions") {
  SeededRng rng(4);
  auto k = random_gram(rng, 15);
  DesignSystem s(k, RegularizerKind::CoefficientNorm);
  s.add_outlier(2);
  const Vector y = testing::random_vector(rng, 15);
  const Vector z = regularized_ls_solve(s, y, 0.7);
  const Matrix x = s.active_design();
  const Matrix p = s.active_penalty(0.7, std::nullopt);
  // Gradient of J: -2 X^T (y - Xz) + 2 P z = 0.
  CHECK((x.transpose() * (y - x * z) - p * z).norm() < 1e-9);
  CHECK(testing::rel_diff(z, dense_ridge(x, p, y)) < 1e-9);
  CHECK_THROWS_AS(regularized_ls_solve(s, y, 0.0), ArgumentError);
  CHECK_THROWS_AS(regularized_ls_solve(s, y, -1.0), ArgumentError);
}

TEST_CASE("chol_extend follows the from-scratch solution") {
  SeededRng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<std::size_t>(rng.integer(5, 40));
    // The RKHS penalty is only as well conditioned as K itself.
    const bool rkhs = t % 2 == 1;
    auto k = rkhs ? std::make_shared<const Matrix>(testing::conditioned_gram(rng, n))
                  : random_gram(rng, n, 0.05 + 0.3 * rng.uniform());
    const double lambda = 0.01 + rng.uniform();
    const Vector w = (testing::random_vector(rng, n + 1).array().abs() + 0.5).matrix();
    DesignSystem s(k, rkhs ? RegularizerKind::RkhsNorm : RegularizerKind::CoefficientNorm);
    const Vector y = testing::random_vector(rng, n, 3.0);
    FactoredSolve fs = chol_init(s, lambda, y, w);
    CHECK(testing::rel_diff(fs.z, regularized_ls_solve(s, y, lambda, w)) < 1e-9);
    const auto picks = rng.sample_without_replacement(n, std::min<std::size_t>(5, n / 2));
    for (std::size_t j : picks) {
      const Vector z = chol_extend(fs.factor, s, j, lambda, y, w);
      CHECK(testing::rel_diff(z, regularized_ls_solve(s, y, lambda, w)) < 1e-8);
    }
    CHECK(s.outlier_support() == picks);
    CHECK_THROWS_AS(chol_extend(fs.factor, s, picks.front(), lambda, y, w), LogicError);
  }
}

TEST_CASE("select_index takes the largest magnitude, smallest index on ties") {
  const std::vector<double> r{1.0, -3.0, 3.0, 0.5};
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(select_index(r, all) == 1);
  const std::vector<std::size_t> some{2, 3, 0};
  CHECK(select_index(r, some) == 2);
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(select_index(r, none), LogicError);
}

TEST_CASE("config validation") {
  KgardConfig c;
  CHECK_NOTHROW(c.validate(10));
  CHECK(c.selection_cap(10) == 5);
  CHECK(c.selection_cap(11) == 5);
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(10), ArgumentError);
  c.lambda = 1.0;
  c.tikhonov_weights = Vector::Ones(10);
  CHECK_THROWS_AS(c.validate(10), ArgumentError);
  c.tikhonov_weights = Vector::Ones(11);
  CHECK_NOTHROW(c.validate(10));
  (*c.tikhonov_weights)(3) = 0.0;
  CHECK_THROWS_AS(c.validate(10), ArgumentError);
  c.tikhonov_weights.reset();
  c.max_selections = 11;
  CHECK_THROWS_AS(c.validate(10), ArgumentError);
  c.max_selections = 2;
  CHECK(c.selection_cap(10) == 2);
  c.epsilon = -1.0;
  CHECK_THROWS_AS(c.validate(10), ArgumentError);
}

TEST_CASE("KGARD recovers gross outliers on a smooth function") {
  SeededRng rng(6);
  const std::size_t n = 80;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) / (n - 1);
  const PointSet pts = PointSet::from_scalars(xs);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = std::sin(6.0 * xs[i]) + 0.01 * rng.normal();
  const std::vector<std::size_t> truth{5, 17, 40, 62};
  for (std::size_t j : truth) y(static_cast<Eigen::Index>(j)) += (j % 2 == 0 ? 5.0 : -5.0);

  KgardConfig c;
  c.lambda = 0.01;
  c.epsilon = 0.2;
  const KgardSolution sol = kgard_fit(Dataset{pts, y}, KernelParams{0.15}, c);
  std::set<std::size_t> got;
  for (auto j : sol.support()) got.insert(j);
  CHECK(got == std::set<std::size_t>(truth.begin(), truth.end()));
  CHECK_FALSE(sol.truncated);
  CHECK(sol.residual.norm() <= 0.2);
  CHECK(sol.iterations == truth.size());
  CHECK(sol.residual_history.size() == sol.iterations + 1);
  const SupportMetrics m = support_metrics(sol.support(), truth);
  CHECK(m.correct == 1.0);
  CHECK(m.wrong == 0.0);

  // The outlier estimates absorb the impulses.
  const Vector u = sol.outlier_vector(n);
  for (std::size_t j : truth) CHECK(std::abs(u(static_cast<Eigen::Index>(j))) > 4.0);
  CHECK((fitted_values(gram_matrix(pts, KernelParams{0.15}), sol) -
         predict(sol, pts, pts, KernelParams{0.15}))
            .norm() < 1e-10);
}

TEST_CASE("KGARD loop invariants on random data") {
  SeededRng rng(7);
  for (int t = 0; t < 40; ++t) {
    const auto n = static_cast<std::size_t>(rng.integer(4, 60));
    const bool rkhs = t % 3 == 0;
    auto k = rkhs ? std::make_shared<const Matrix>(testing::conditioned_gram(rng, n))
                  : random_gram(rng, n, 0.05 + 0.3 * rng.uniform());
    KgardConfig c;
    c.lambda = 0.05 + 2.0 * rng.uniform();
    c.epsilon = rng.uniform() < 0.3 ? 0.0 : 2.0 * rng.uniform() * std::sqrt(static_cast<double>(n));
    c.stop_norm = t % 2 == 0 ? StopNorm::L2 : StopNorm::Linf;
    c.regularizer = rkhs ? RegularizerKind::RkhsNorm : RegularizerKind::CoefficientNorm;
    const Vector y = testing::random_vector(rng, n, 2.0);
    const KgardModel model(k, c);
    const KgardSolution sol = model.fit(y);

    const auto support = sol.support();
    CHECK(std::set<std::size_t>(support.begin(), support.end()).size() == support.size());
    CHECK(support.size() <= n / 2);
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i) {
      CHECK(sol.objective_history[i] <= sol.objective_history[i - 1] * (1.0 + 1e-12) + 1e-12);
    }
    const double final_norm = stop_norm_value(sol.residual, c.stop_norm);
    if (sol.truncated) {
      CHECK(support.size() == n / 2);
      CHECK(final_norm > c.epsilon);
    } else {
      CHECK(final_norm <= c.epsilon);
    }

    // Final coefficients equal the dense solve on the final support.
    const Matrix x = dense_active_design(*k, support);
    Matrix p;
    if (c.regularizer == RegularizerKind::CoefficientNorm) {
      p = dense_coef_penalty(static_cast<Eigen::Index>(n), support.size(), c.lambda, nullptr);
    } else {
      p = Matrix::Zero(x.cols(), x.cols());
      p.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = c.lambda * (*k);
    }
    const Vector z = dense_ridge(x, p, y);
    Vector mine(x.cols());
    mine.head(static_cast<Eigen::Index>(n)) = sol.alpha;
    mine(static_cast<Eigen::Index>(n)) = sol.bias;
    for (std::size_t s = 0; s < support.size(); ++s) mine(static_cast<Eigen::Index>(n + 1 + s)) = sol.outliers[s].second;
    CHECK(testing::rel_diff(mine, z) < 1e-7);
    CHECK((sol.residual - (y - x * z)).norm() < 1e-6 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("greedy selection follows the largest residual") {
  SeededRng rng(8);
  auto k = random_gram(rng, 30);
  KgardConfig c;
  c.lambda = 0.2;
  c.max_selections = 6;
  const Vector y = testing::random_vector(rng, 30, 4.0);
  const KgardSolution sol = KgardModel(k, c).fit(y);
  REQUIRE(sol.outliers.size() == 6);
  DesignSystem s(k, RegularizerKind::CoefficientNorm);
  for (std::size_t step = 0; step < 6; ++step) {
    const Vector z = regularized_ls_solve(s, y, 0.2);
    const Vector r = y - s.apply_active(z);
    std::vector<std::size_t> inactive;
    for (std::size_t j = 0; j < 30; ++j) {
      if (!s.is_selected(j)) inactive.push_back(j);
    }
    const std::vector<double> rv(r.data(), r.data() + r.size());
    const std::size_t j = select_index(rv, inactive);
    CHECK(sol.outliers[step].first == j);
    s.add_outlier(j);
  }
  CHECK(sol.truncated);
}

TEST_CASE("stopping edge cases") {
  SeededRng rng(9);
  auto k = random_gram(rng, 12);
  const Vector y = testing::random_vector(rng, 12);

  KgardConfig loose;
  loose.epsilon = 1e9;
  const KgardSolution none = KgardModel(k, loose).fit(y);
  CHECK(none.outliers.empty());
  CHECK(none.iterations == 0);
  CHECK_FALSE(none.truncated);

  KgardConfig zero;
  zero.epsilon = 0.0;
  const KgardSolution capped = KgardModel(k, zero).fit(y);
  CHECK(capped.outliers.size() == 6);
  CHECK(capped.truncated);

  KgardConfig ruled;
  ruled.epsilon = 0.0;
  ruled.epsilon_rule = [](const Vector&) { return 1e9; };
  CHECK(KgardModel(k, ruled).fit(y).outliers.empty());

  KgardConfig one = zero;
  one.max_selections = 0;
  CHECK(KgardModel(k, one).fit(y).outliers.empty());

  CHECK_THROWS_AS(KgardModel(k, zero).fit(Vector::Zero(5)), ArgumentError);
  KgardConfig bad;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(KgardModel(k, bad), ArgumentError);
}

TEST_CASE("Tikhonov weights scale the penalty by w^2") {
  SeededRng rng(10);
  auto k = random_gram(rng, 20);
  Vector w = border_boost_weights(20);
  CHECK(w(0) == doctest::Approx(std::sqrt(5.0)));
  CHECK(w(19) == doctest::Approx(std::sqrt(5.0)));
  CHECK(w(5) == 1.0);
  CHECK(w(20) == 1.0);
  KgardConfig c;
  c.lambda = 0.4;
  c.epsilon = 1e9;
  c.tikhonov_weights = w;
  const Vector y = testing::random_vector(rng, 20);
  const KgardSolution sol = KgardModel(k, c).fit(y);
  const Matrix x = dense_active_design(*k, {});
  const Vector z = dense_ridge(x, dense_coef_penalty(20, 0, 0.4, &w), y);
  CHECK((sol.alpha - z.head(20)).norm() < 1e-9);
  CHECK(sol.bias == doctest::Approx(z(20)).epsilon(1e-9));
}

TEST_CASE("duplicate points are handled through lambda") {
  const std::vector<double> xs{0.1, 0.1, 0.5, 0.5, 0.9};
  const PointSet pts = PointSet::from_scalars(xs);
  Vector y(5);
  y << 1.0, 1.1, 0.0, 0.1, 30.0;
  KgardConfig c;
  c.lambda = 0.1;
  c.epsilon = 1.0;
  c.max_selections = 2;
  const KgardSolution sol = kgard_fit(Dataset{pts, y}, KernelParams{0.2}, c);
  REQUIRE_FALSE(sol.outliers.empty());
  CHECK(sol.outliers.front().first == 4);
}

TEST_CASE("pivot collapse falls back to refactorization") {
  // K = I, so [K 1] has full row rank and the new pivot for e_j is about
  // lambda * [(I + 11^T)^-1]_jj = 0.8 lambda, below the append floor.
  const std::vector<double> xs{0.0, 10.0, 20.0, 30.0};
  const Matrix k = gram_matrix(PointSet::from_scalars(xs), KernelParams{0.1});
  REQUIRE(k == Matrix::Identity(4, 4));
  Vector y(4);
  y << 1.0, -2.0, 0.5, 3.0;
  KgardConfig c;
  c.lambda = 1e-13;
  c.epsilon = 0.0;
  c.max_selections = 2;
  try {
    const KgardSolution sol = KgardModel(k, c).fit(y);
    CHECK(sol.iterations == 2);
    CHECK(sol.refactorizations == 2);
  } catch (const NumericalError&) {
    // Acceptable: the refactorized system itself is numerically singular.
  }
  KgardConfig ok;
  ok.lambda = 1.0;
  ok.epsilon = 0.0;
  ok.max_selections = 2;
  const KgardSolution fine = KgardModel(k, ok).fit(y);
  CHECK(fine.iterations == 2);
  CHECK(fine.refactorizations == 0);
}

TEST_CASE("dataset validation") {
  const std::vector<double> xs{0.0, 1.0};
  Dataset d{PointSet::from_scalars(xs), Vector::Zero(3)};
  CHECK_THROWS_AS(d.validate(), ArgumentError);
  CHECK_THROWS_AS(kgard_fit(d, KernelParams{1.0}, KgardConfig{}), ArgumentError);
  Dataset e;
  CHECK_THROWS_AS(e.validate(), ArgumentError);
}
