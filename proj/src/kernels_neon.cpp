#include <arm_neon.h>

#include "facelap/kernels.hpp"

namespace facelap::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_axpy_neon(const double* a, const double* x, double s, double* y, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(s);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    acc = vfmaq_f64(acc, va, vld1q_f64(x + i));
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), vs, va));
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) {
    r += a[i] * x[i];
    y[i] += s * a[i];
  }
  return r;
}

void axpy2_neon(double* y, double alpha, const double* u, double beta, const double* v,
                std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  const float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vld1q_f64(y + i);
    acc = vfmaq_f64(acc, va, vld1q_f64(u + i));
    acc = vfmaq_f64(acc, vb, vld1q_f64(v + i));
    vst1q_f64(y + i, acc);
  }
  for (; i < n; ++i) y[i] += alpha * u[i] + beta * v[i];
}

void rotate_neon(double* x, double* y, double c, double s, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xi = vld1q_f64(x + i);
    const float64x2_t yi = vld1q_f64(y + i);
    vst1q_f64(x + i, vfmsq_f64(vmulq_f64(vc, xi), vs, yi));
    vst1q_f64(y + i, vfmaq_f64(vmulq_f64(vc, yi), vs, xi));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

const KernelTable kNeon{Isa::Neon,  dot_neon,    axpy_neon,           dot_axpy_neon,
                        axpy2_neon, rotate_neon, squared_distance_neon};

}  // namespace

const KernelTable* neon_kernels_impl() { return &kNeon; }

}  // namespace facelap::simd
