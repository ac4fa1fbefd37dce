#include "facelap/kernels.hpp"

namespace facelap::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_axpy_scalar(const double* a, const double* x, double s, double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += a[i] * x[i];
    y[i] += s * a[i];
  }
  return acc;
}

void axpy2_scalar(double* y, double alpha, const double* u, double beta, const double* v,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * u[i] + beta * v[i];
}

void rotate_scalar(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

const KernelTable kScalar{Isa::Scalar,  dot_scalar,    axpy_scalar,           dot_axpy_scalar,
                          axpy2_scalar, rotate_scalar, squared_distance_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace facelap::simd
