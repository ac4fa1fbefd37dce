#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "facelap/linalg.hpp"
#include "support.hpp"

using namespace facelap;
using facelap::testing::random_matrix;
using facelap::testing::random_symmetric;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("eigenvalues match a reference solver") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 3u, 5u, 17u, 64u, 150u}) {
    CAPTURE(n);
    const Matrix a = random_symmetric(n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(a));
    const auto ours = symmetric_eigenvalues(a);
    REQUIRE(ours.size() == n);
    const double scale = std::max(1.0, ref.eigenvalues().cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ours[i] - ref.eigenvalues()(i)) <= 1e-11 * scale);
  }
}

TEST_CASE("eigenvectors are orthonormal with small residual") {
  std::mt19937_64 rng(5);
  const std::size_t n = 80;
  const Matrix a = random_symmetric(n, rng);
  const auto ed = symmetric_eigen(a, 30);
  REQUIRE(ed.vectors.rows() == n);
  REQUIRE(ed.vectors.cols() == 30);
  const auto full = symmetric_eigenvalues(a);
  const Matrix av = multiply(a, ed.vectors);
  double residual = 0.0;
  for (std::size_t c = 0; c < 30; ++c) {
    CHECK(ed.values[c] == doctest::Approx(full[c]).epsilon(1e-12));
    for (std::size_t r = 0; r < n; ++r)
      residual = std::max(residual, std::abs(av(r, c) - ed.values[c] * ed.vectors(r, c)));
    for (std::size_t d = 0; d <= c; ++d) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += ed.vectors(r, c) * ed.vectors(r, d);
      CHECK(std::abs(s - (c == d ? 1.0 : 0.0)) < 1e-12);
    }
  }
  CHECK(residual < 1e-10);
}

TEST_CASE("only the upper triangle is read") {
  std::mt19937_64 rng(9);
  Matrix a = random_symmetric(12, rng);
  const auto clean = symmetric_eigenvalues(a);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = 1e6;
  const auto dirty = symmetric_eigenvalues(a);
  for (std::size_t i = 0; i < 12; ++i) CHECK(dirty[i] == clean[i]);
}

TEST_CASE("diagonal and repeated eigenvalues") {
  Matrix d(4, 4);
  d(0, 0) = 3;
  d(1, 1) = -1;
  d(2, 2) = 3;
  d(3, 3) = 0;
  const auto ev = symmetric_eigenvalues(d);
  CHECK(ev == std::vector<double>{-1, 0, 3, 3});
  const auto id = symmetric_eigen(Matrix::identity(5), 5);
  for (double v : id.values) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("cholesky and triangular solves") {
  std::mt19937_64 rng(13);
  const Matrix g = random_matrix(10, 10, rng);
  Matrix spd = multiply(g.transposed(), g);
  for (std::size_t i = 0; i < 10; ++i) spd(i, i) += 1.0;
  const Matrix l = cholesky(spd);
  const Matrix llt = multiply(l, l.transposed());
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) CHECK(llt(i, j) == doctest::Approx(spd(i, j)).epsilon(1e-12));

  std::vector<double> b(10);
  for (std::size_t i = 0; i < 10; ++i) b[i] = static_cast<double>(i) - 4.5;
  auto x = b;
  solve_lower(l, x);
  solve_lower_transposed(l, x);
  const auto back = multiply(spd, x);
  for (std::size_t i = 0; i < 10; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-10));

  Matrix bad = Matrix::identity(3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(cholesky(bad), NumericalError);
}

TEST_CASE("asymmetry measure") {
  Matrix a = Matrix::identity(3);
  CHECK(asymmetry(a) == 0.0);
  a(0, 1) = 0.5;
  CHECK(asymmetry(a) > 0.0);
  CHECK_THROWS(symmetric_eigen(Matrix::identity(3), 4));
}

}
