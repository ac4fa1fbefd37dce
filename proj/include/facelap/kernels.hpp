#pragma once

// Data-parallel double-precision kernels used by the dense linear algebra,
// the GLF projection and the classifier kernels. Each kernel has a scalar
// reference implementation plus SIMD variants (AVX2+FMA on x86-64, NEON on
// aarch64). The active variant is chosen once at startup from CPUID and can
// be pinned with FACELAP_SIMD=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>

namespace facelap::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // returns sum_i a[i] * x[i] and performs y += s * a in the same pass
  double (*dot_axpy)(const double* a, const double* x, double s, double* y, std::size_t n);
  // y += alpha * u + beta * v
  void (*axpy2)(double* y, double alpha, const double* u, double beta, const double* v, std::size_t n);
  // (x, y) <- (c x - s y, s x + c y)
  void (*rotate)(double* x, double* y, double c, double s, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();

// Null when the variant was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

// Active kernel table. Selected on first use.
const KernelTable& active();
// Overrides the active table (tests and benchmarking). Throws if unsupported.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace facelap::simd
