#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sparcs/error.hpp"
#include "sparcs/linalg.hpp"
#include "sparcs/rng.hpp"

using sparcs::Matrix;

TEST_CASE("matmul on a hand-computed product") {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  const Matrix b{{7, 8}, {9, 10}, {11, 12}};
  CHECK(sparcs::matmul(a, b) == Matrix{{58, 64}, {139, 154}});
}

TEST_CASE("transposed products agree with explicit transposes") {
  sparcs::Rng rng(3);
  const Matrix a = Matrix::gaussian(5, 4, rng);
  const Matrix b = Matrix::gaussian(5, 3, rng);
  const Matrix c = Matrix::gaussian(6, 4, rng);
  CHECK(oracle::max_diff(sparcs::matmul_tn(a, b), oracle::mul(a.transposed(), b)) < 1e-14);
  CHECK(oracle::max_diff(sparcs::matmul_nt(a, c), oracle::mul(a, c.transposed())) < 1e-14);

  Matrix acc(4, 3, 1.0);
  sparcs::matmul_tn_acc(a, b, acc);
  Matrix want = oracle::mul(a.transposed(), b);
  want += Matrix(4, 3, 1.0);
  CHECK(oracle::max_diff(acc, want) < 1e-14);
}

TEST_CASE("shape mismatches name both shapes") {
  const Matrix a(2, 3), b(2, 3);
  CHECK_THROWS_AS(sparcs::matmul(a, b), sparcs::DimensionError);
  try {
    sparcs::matmul(a, b);
  } catch (const sparcs::DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("row and column scaling") {
  const Matrix m{{1, 2}, {3, 4}};
  const std::vector<double> d{2, -1};
  CHECK(sparcs::scale_rows(d, m) == Matrix{{2, 4}, {-3, -4}});
  CHECK(sparcs::scale_cols(m, d) == Matrix{{2, -2}, {6, -4}});
}

TEST_CASE("norms") {
  const Matrix m{{1, -2}, {-3, 4}};
  CHECK(sparcs::inf_norm(m) == 7.0);
  CHECK(sparcs::max_abs(m) == 4.0);
  CHECK(sparcs::frobenius_norm(m) == doctest::Approx(std::sqrt(30.0)).epsilon(1e-15));
}

TEST_CASE("determinant") {
  CHECK(sparcs::determinant(Matrix{{2, 1}, {1, 3}}) == doctest::Approx(5.0));
  CHECK(sparcs::determinant(Matrix{{0, 1}, {1, 0}}) == doctest::Approx(-1.0));
  CHECK(sparcs::determinant(Matrix{{1, 2}, {2, 4}}) == doctest::Approx(0.0));
}

TEST_CASE("qr_orthonormal samples SO(d)") {
  for (std::size_t d : {1, 2, 5, 20}) {
    sparcs::Rng rng(100 + d);
    const Matrix q = sparcs::qr_orthonormal(Matrix::gaussian(d, d, rng));
    CHECK(oracle::max_diff(oracle::mul(q.transposed(), q), Matrix::identity(d)) < 1e-12);
    CHECK(sparcs::determinant(q) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("qr_orthonormal rejects singular input") {
  CHECK_THROWS_AS(sparcs::qr_orthonormal(Matrix{{1, 2}, {2, 4}}), sparcs::DegeneracyError);
}

TEST_CASE("least squares recovers exact coefficients") {
  sparcs::Rng rng(9);
  const Matrix x = Matrix::gaussian(40, 3, rng);
  const Matrix beta{{1.5, -2}, {0.25, 0}, {-3, 4}};
  const Matrix y = oracle::mul(x, beta);
  CHECK(oracle::max_diff(sparcs::least_squares(x, y), beta) < 1e-10);

  const Matrix xi = sparcs::with_ones_column(x);
  CHECK(xi.cols() == 4);
  CHECK(xi(7, 3) == 1.0);
}

TEST_CASE("least squares rejects collinear columns") {
  const Matrix x{{1, 2}, {2, 4}, {3, 6}};
  CHECK_THROWS_AS(sparcs::least_squares(x, Matrix{{1}, {2}, {3}}), sparcs::DegeneracyError);
}

TEST_CASE("rng is reproducible and in range") {
  sparcs::Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());
  sparcs::Rng r(1);
  for (int k = 0; k < 1000; ++k) {
    const double u = r.uniform(-1.0, 1.0);
    CHECK(u >= -1.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  CHECK(sparcs::derive_seed(1, 2) != sparcs::derive_seed(1, 3));
  CHECK(sparcs::derive_seed(1, 2) == sparcs::derive_seed(1, 2));
}

TEST_CASE("gaussian draws have unit scale") {
  sparcs::Rng r(5);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.03);
  CHECK(std::abs(s2 / n - 1.0) < 0.05);
}
