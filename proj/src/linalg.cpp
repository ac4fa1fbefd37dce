#include "facelap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "facelap/kernels.hpp"

namespace facelap {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  Matrix out(a.rows(), b.cols());
  const auto& k = simd::active();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double s = a(i, j);
      if (s != 0.0) k.axpy(s, b.row(j).data(), dst.data(), b.cols());
    }
  }
  return out;
}

std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("multiply: dimension mismatch");
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = simd::dot(a.row(i), x);
  return y;
}

double asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  const double scale = a.max_abs();
  return scale > 0.0 ? worst / scale : worst;
}

namespace {

// Householder reduction A = Q T Q^T working on the upper triangle.
// Reflector k (acting on indices k+1..n-1) is left in row k of `work`.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1; off[n-1] = 0
  std::vector<double> beta;
  Matrix work;
};

Tridiagonal tridiagonalize(const Matrix& a) {
  const std::size_t n = a.rows();
  const auto& kern = simd::active();
  Tridiagonal t{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0), a};
  Matrix& w = t.work;
  std::vector<double> p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t len = n - k - 1;
    double* v = &w(k, k + 1);
    t.diag[k] = w(k, k);

    const double norm_x = std::sqrt(kern.dot(v, v, len));
    if (norm_x == 0.0) {
      t.off[k] = 0.0;
      continue;
    }
    const double alpha = v[0] >= 0.0 ? -norm_x : norm_x;
    v[0] -= alpha;
    const double vtv = kern.dot(v, v, len);
    if (vtv == 0.0) {
      t.off[k] = alpha;
      continue;
    }
    const double beta = 2.0 / vtv;
    t.off[k] = alpha;
    t.beta[k] = beta;

    // p = beta * A22 v with A22 held in the upper triangle.
    std::fill_n(p.begin(), len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t gi = k + 1 + i;
      double* arow = &w(gi, gi);
      p[i] += arow[0] * v[i];
      p[i] += kern.dot_axpy(arow + 1, v + i + 1, v[i], p.data() + i + 1, len - i - 1);
    }
    for (std::size_t i = 0; i < len; ++i) p[i] *= beta;
    const double kk = 0.5 * beta * kern.dot(p.data(), v, len);
    kern.axpy(-kk, v, p.data(), len);

    // A22 -= v p^T + p v^T (upper triangle only)
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t gi = k + 1 + i;
      kern.axpy2(&w(gi, gi), -v[i], p.data() + i, -p[i], v + i, len - i);
    }
  }
  if (n >= 2) {
    t.diag[n - 2] = w(n - 2, n - 2);
    t.diag[n - 1] = w(n - 1, n - 1);
    t.off[n - 2] = w(n - 2, n - 1);
  } else if (n == 1) {
    t.diag[0] = w(0, 0);
  }
  return t;
}

// Implicit QL on the tridiagonal (diag, off). When `zt` is non-null its rows
// are rotated alongside, so on return row i holds the T-eigenvector of diag[i].
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Matrix* zt) {
  const std::size_t n = d.size();
  if (n == 0) return;
  const auto& kern = simd::active();
  const double eps = std::numeric_limits<double>::epsilon();
  const std::size_t budget = 50 * n;
  std::size_t iterations = 0;

  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      do {
        if (++iterations > budget) {
          throw NumericalError("symmetric eigensolver: QL did not converge after " +
                               std::to_string(budget) + " iterations (residual " +
                               std::to_string(std::abs(e[l])) + ")");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (zt != nullptr) {
            // Columns (ii, ii+1) of V become rows of zt; V' = [c*Vi - s*Vi1, s*Vi + c*Vi1].
            kern.rotate(zt->row(ii).data(), zt->row(ii + 1).data(), c, s, n);
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  Tridiagonal t = tridiagonalize(a);
  tridiagonal_ql(t.diag, t.off, nullptr);
  std::sort(t.diag.begin(), t.diag.end());
  return t.diag;
}

EigenDecomposition symmetric_eigen(const Matrix& a, std::size_t k) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("symmetric_eigen: matrix not square");
  if (k > n) throw std::invalid_argument("symmetric_eigen: k exceeds dimension");

  Tridiagonal t = tridiagonalize(a);
  Matrix zt = Matrix::identity(n);
  tridiagonal_ql(t.diag, t.off, &zt);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return t.diag[x] < t.diag[y]; });

  const auto& kern = simd::active();
  EigenDecomposition out{std::vector<double>(k), Matrix(n, k)};
  std::vector<double> z(n);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = order[c];
    out.values[c] = t.diag[src];
    std::copy(zt.row(src).begin(), zt.row(src).end(), z.begin());
    // z <- H_0 H_1 ... H_{n-3} z
    for (std::size_t kk = n >= 2 ? n - 2 : 0; kk-- > 0;) {
      if (t.beta[kk] == 0.0) continue;
      const double* v = &t.work(kk, kk + 1);
      const std::size_t len = n - kk - 1;
      const double s = t.beta[kk] * kern.dot(v, z.data() + kk + 1, len);
      kern.axpy(-s, v, z.data() + kk + 1, len);
    }
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = z[r];
  }
  return out;
}

Matrix cholesky(const Matrix& spd) {
  const std::size_t n = spd.rows();
  if (n != spd.cols()) throw std::invalid_argument("cholesky: matrix not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = spd(j, j) - simd::dot(l.row(j).first(j), l.row(j).first(j));
    if (!(diag > 0.0)) {
      throw NumericalError("cholesky: matrix not positive definite at pivot " + std::to_string(j));
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      l(i, j) = (spd(i, j) - simd::dot(l.row(i).first(j), l.row(j).first(j))) / ljj;
    }
  }
  return l;
}

void solve_lower(const Matrix& lower, std::span<double> b) {
  const std::size_t n = lower.rows();
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = (b[i] - simd::dot(lower.row(i).first(i), b.first(i))) / lower(i, i);
  }
}

void solve_lower_transposed(const Matrix& lower, std::span<double> b) {
  const std::size_t n = lower.rows();
  for (std::size_t i = n; i-- > 0;) {
    b[i] /= lower(i, i);
    // b[0..i) -= b[i] * L[i, 0..i)
    simd::active().axpy(-b[i], lower.row(i).data(), b.data(), i);
  }
}

}  // namespace facelap
