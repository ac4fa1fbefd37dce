#pragma once

// Dense row-major matrices and the symmetric eigensolver that backs every
// spectral computation in the library (graph Laplacian basis, Shape-DNA,
// FLDA). No external BLAS/LAPACK; inner loops go through facelap::simd.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace facelap {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::vector<double> column(std::size_t c) const;
  Matrix transposed() const;
  double max_abs() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
std::vector<double> multiply(const Matrix& a, std::span<const double> x);

// Eigenpairs of a symmetric matrix, eigenvalues ascending.
// vectors is n x k with one eigenvector per column.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};

// Largest |a_ij - a_ji| relative to max|a|; 0 for an exactly symmetric matrix.
double asymmetry(const Matrix& a);

// All eigenvalues, ascending. Only the upper triangle of `a` is read.
std::vector<double> symmetric_eigenvalues(const Matrix& a);

// The `k` smallest eigenpairs, ascending. Only the upper triangle is read.
// Throws NumericalError if the QL iteration budget (50 n) is exhausted.
EigenDecomposition symmetric_eigen(const Matrix& a, std::size_t k);

// Lower-triangular factor of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& spd);

// Solves L x = b in place (L lower triangular).
void solve_lower(const Matrix& lower, std::span<double> b);
// Solves L^T x = b in place.
void solve_lower_transposed(const Matrix& lower, std::span<double> b);

}  // namespace facelap
