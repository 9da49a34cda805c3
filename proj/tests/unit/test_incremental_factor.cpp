#include "doctest.h"
#include "instances.hpp"
#include "kgard/errors.hpp"
#include "kgard/incremental_factor.hpp"

using namespace kgard;

namespace {

Matrix random_spd(SeededRng& rng, Eigen::Index n) {
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("factorize matches a reference Cholesky") {
  SeededRng rng(1);
  const Matrix m = random_spd(rng, 9);
  const IncrementalFactor f = IncrementalFactor::factorize(m);
  const Matrix ref = Eigen::LLT<Matrix>(m).matrixL();
  CHECK((f.lower() - ref).norm() < 1e-12);
  CHECK(f.order() == 9);
  CHECK(f.appended() == 0);

  const Vector b = testing::random_vector(rng, 9);
  CHECK((m * f.solve(b) - b).norm() < 1e-10);
}

TEST_CASE("appending rows reproduces the factor of the grown matrix") {
  SeededRng rng(2);
  const Matrix full = random_spd(rng, 12);
  IncrementalFactor f = IncrementalFactor::factorize(full.topLeftCorner(7, 7));
  for (Eigen::Index k = 7; k < 12; ++k) {
    REQUIRE(f.try_append(full.col(k).head(k), full(k, k)));
  }
  const Matrix ref = Eigen::LLT<Matrix>(full).matrixL();
  CHECK((f.lower() - ref).norm() < 1e-10);
  const Vector b = testing::random_vector(rng, 12);
  CHECK((full * f.solve(b) - b).norm() < 1e-9);
  CHECK((f.forward(b) - ref.triangularView<Eigen::Lower>().solve(b)).norm() < 1e-10);
}

TEST_CASE("copies share the leading block but grow independently") {
  SeededRng rng(3);
  const Matrix full = random_spd(rng, 6);
  const IncrementalFactor base = IncrementalFactor::factorize(full.topLeftCorner(5, 5));
  IncrementalFactor a = base;
  REQUIRE(a.try_append(full.col(5).head(5), full(5, 5)));
  CHECK(a.order() == 6);
  CHECK(base.order() == 5);
  CHECK((base.lower() - Eigen::LLT<Matrix>(full.topLeftCorner(5, 5)).matrixL().toDenseMatrix()).norm() < 1e-12);
}

TEST_CASE("collapsing pivot is refused and leaves the factor untouched") {
  Matrix m = Matrix::Identity(2, 2);
  IncrementalFactor f = IncrementalFactor::factorize(m);
  const Matrix before = f.lower();
  Vector cross(2);
  cross << 1.0, 0.0;
  // New column equals e_1: b^2 = 1 - 1 = 0.
  CHECK_FALSE(f.try_append(cross, 1.0));
  CHECK(f.order() == 2);
  CHECK(f.lower() == before);
}

TEST_CASE("non positive definite input reports the pivot") {
  Matrix m(3, 3);
  m << 4, 2, 0,
       2, 1, 0,
       0, 0, 1;
  try {
    (void)IncrementalFactor::factorize(m);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.pivot() == 1);
  }
  CHECK_THROWS_AS(IncrementalFactor::factorize(Matrix(2, 3)), ArgumentError);
}
