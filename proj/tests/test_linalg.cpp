#include <cmath>

#include <doctest.h>

#include "elai/errors.hpp"
#include "elai/linalg.hpp"
#include "elai/rng.hpp"
#include "test_util.hpp"

using namespace elai;

namespace {

// Closed-form eigendecomposition of a symmetric 2x2 [[a, c], [c, b]].
struct Eig2 {
  double l1, l2;          // descending
  double v1x, v1y;        // unit eigenvector of l1
};

Eig2 closed_form_2x2(double a, double b, double c) {
  const double tr = a + b;
  const double disc = std::sqrt((a - b) * (a - b) + 4.0 * c * c);
  Eig2 e;
  e.l1 = 0.5 * (tr + disc);
  e.l2 = 0.5 * (tr - disc);
  double vx = c;
  double vy = e.l1 - a;
  if (vx == 0.0 && vy == 0.0) {  // already diagonal
    vx = a >= b ? 1.0 : 0.0;
    vy = a >= b ? 0.0 : 1.0;
  }
  const double norm = std::sqrt(vx * vx + vy * vy);
  e.v1x = vx / norm;
  e.v1y = vy / norm;
  if (std::abs(e.v1x) >= std::abs(e.v1y) ? e.v1x < 0.0 : e.v1y < 0.0) {
    e.v1x = -e.v1x;
    e.v1y = -e.v1y;
  }
  return e;
}

}  // namespace

TEST_CASE("matmul and transpose basics") {
  Matrix a(2, 3);
  a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
  a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
  Matrix b(3, 2);
  b(0, 0) = 7; b(0, 1) = 8;
  b(1, 0) = 9; b(1, 1) = 10;
  b(2, 0) = 11; b(2, 1) = 12;

  const Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 58);
  CHECK(c(0, 1) == 64);
  CHECK(c(1, 0) == 139);
  CHECK(c(1, 1) == 154);

  const Matrix at = transpose(a);
  CHECK(at.rows() == 3);
  CHECK(at(2, 1) == 6);

  CHECK(test::error_code_of([&] { matmul(a, a); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("jacobi eigendecomposition matches the closed-form 2x2 solution") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-5, 5);
    const double b = rng.uniform(-5, 5);
    const double c = rng.uniform(-5, 5);
    Matrix m(2, 2);
    m(0, 0) = a; m(0, 1) = c;
    m(1, 0) = c; m(1, 1) = b;

    const EighResult eig = jacobi_eigh(m);
    const Eig2 oracle = closed_form_2x2(a, b, c);

    CHECK(eig.eigenvalues[0] == doctest::Approx(oracle.l1).epsilon(1e-9));
    CHECK(eig.eigenvalues[1] == doctest::Approx(oracle.l2).epsilon(1e-9));
    CHECK(std::abs(eig.eigenvectors(0, 0) - oracle.v1x) < 1e-8);
    CHECK(std::abs(eig.eigenvectors(1, 0) - oracle.v1y) < 1e-8);
  }
}

TEST_CASE("jacobi handles diagonal and zero matrices") {
  Matrix d(3, 3);
  d(0, 0) = 1.0; d(1, 1) = 5.0; d(2, 2) = 3.0;
  const EighResult eig = jacobi_eigh(d);
  CHECK(eig.eigenvalues[0] == 5.0);
  CHECK(eig.eigenvalues[1] == 3.0);
  CHECK(eig.eigenvalues[2] == 1.0);
  CHECK(eig.eigenvectors(1, 0) == 1.0);  // sign convention

  const EighResult zero = jacobi_eigh(Matrix(4, 4));
  for (double v : zero.eigenvalues) CHECK(v == 0.0);
}

TEST_CASE("eigenvectors are orthonormal") {
  Rng rng(7);
  Matrix m(5, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i; j < 5; ++j) {
      m(i, j) = rng.uniform(-1, 1);
      m(j, i) = m(i, j);
    }
  }
  const EighResult eig = jacobi_eigh(m);
  const Matrix vtv = matmul(transpose(eig.eigenvectors), eig.eigenvectors);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::abs(vtv(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
  }
}

TEST_CASE("cholesky factors and triangular solves") {
  Matrix a(3, 3);
  a(0, 0) = 4; a(0, 1) = 2; a(0, 2) = 0.6;
  a(1, 0) = 2; a(1, 1) = 5; a(1, 2) = 1.2;
  a(2, 0) = 0.6; a(2, 1) = 1.2; a(2, 2) = 3;

  const auto l = cholesky(a);
  REQUIRE(l.has_value());
  const Matrix llt = matmul(*l, transpose(*l));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(llt(i, j) == doctest::Approx(a(i, j)).epsilon(1e-12));
    }
  }

  // L^-1 B round trip.
  Matrix b(3, 1);
  b(0, 0) = 1; b(1, 0) = 2; b(2, 0) = 3;
  const Matrix x = solve_lower(*l, b);
  const Matrix back = matmul(*l, x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back(i, 0) == doctest::Approx(b(i, 0)).epsilon(1e-12));
  }

  // L^-T v round trip.
  const std::vector<double> v = {0.5, -1.0, 2.0};
  const auto w = solve_lower_transposed(*l, v);
  const auto vv = matvec(transpose(*l), w);
  for (std::size_t i = 0; i < 3; ++i) CHECK(vv[i] == doctest::Approx(v[i]).epsilon(1e-12));

  // Not positive definite.
  Matrix bad(2, 2);
  bad(0, 0) = 1; bad(0, 1) = 2;
  bad(1, 0) = 2; bad(1, 1) = 1;
  CHECK_FALSE(cholesky(bad).has_value());
  CHECK_FALSE(cholesky(Matrix(2, 2)).has_value());
}
