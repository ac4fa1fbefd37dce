#include <random>
#include <vector>

#include "doctest.h"
#include "facelap/kernels.hpp"

using namespace facelap;

namespace {

std::vector<const simd::KernelTable*> variants() {
  std::vector<const simd::KernelTable*> out;
  if (simd::isa_supported(simd::Isa::Avx2) && simd::avx2_kernels()) out.push_back(simd::avx2_kernels());
  if (simd::isa_supported(simd::Isa::Neon) && simd::neon_kernels()) out.push_back(simd::neon_kernels());
  return out;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double sum_abs_product(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return s;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels match hand values") {
  const auto& k = simd::scalar_kernels();
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  CHECK(k.dot(a, b, 3) == 12.0);
  CHECK(k.squared_distance(a, b, 3) == 9.0 + 49.0 + 9.0);
  double y[] = {1, 1, 1};
  k.axpy(2.0, a, y, 3);
  CHECK(y[2] == 7.0);
  double x[] = {1, 0};
  double z[] = {0, 1};
  k.rotate(x, z, 0.0, 1.0, 2);  // quarter turn
  CHECK(x[0] == 0.0);
  CHECK(z[0] == 1.0);
  CHECK(x[1] == -1.0);
  CHECK(k.dot(a, b, 0) == 0.0);
}

TEST_CASE("SIMD variants agree with the scalar reference") {
  const auto& ref = simd::scalar_kernels();
  std::mt19937_64 rng(7);
  for (const auto* var : variants()) {
    CAPTURE(simd::isa_name(var->isa));
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 751u}) {
      CAPTURE(n);
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const double scale = sum_abs_product(a, b) + 1e-300;
      CHECK(std::abs(var->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-13 * scale);

      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
      CHECK(std::abs(var->squared_distance(a.data(), b.data(), n) - ref.squared_distance(a.data(), b.data(), n)) <=
            1e-13 * (sq + 1e-300));

      auto y1 = random_vec(n, rng);
      auto y2 = y1;
      ref.axpy(0.37, a.data(), y1.data(), n);
      var->axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));

      auto z1 = random_vec(n, rng);
      auto z2 = z1;
      const double d1 = ref.dot_axpy(a.data(), b.data(), -1.25, z1.data(), n);
      const double d2 = var->dot_axpy(a.data(), b.data(), -1.25, z2.data(), n);
      CHECK(std::abs(d1 - d2) <= 1e-13 * scale);
      for (std::size_t i = 0; i < n; ++i) CHECK(z1[i] == doctest::Approx(z2[i]).epsilon(1e-14));

      auto w1 = random_vec(n, rng);
      auto w2 = w1;
      ref.axpy2(w1.data(), 0.5, a.data(), -2.0, b.data(), n);
      var->axpy2(w2.data(), 0.5, a.data(), -2.0, b.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-14));

      auto p1 = a, q1 = b, p2 = a, q2 = b;
      ref.rotate(p1.data(), q1.data(), 0.6, 0.8, n);
      var->rotate(p2.data(), q2.data(), 0.6, 0.8, n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-14));
        CHECK(q1[i] == doctest::Approx(q2[i]).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("unaligned tails are handled") {
  std::mt19937_64 rng(11);
  auto buf_a = random_vec(40, rng);
  auto buf_b = random_vec(40, rng);
  const auto& ref = simd::scalar_kernels();
  for (const auto* var : variants()) {
    for (std::size_t off = 0; off < 4; ++off) {
      const double* a = buf_a.data() + off;
      const double* b = buf_b.data() + off;
      CHECK(var->dot(a, b, 33) == doctest::Approx(ref.dot(a, b, 33)).epsilon(1e-13));
    }
  }
}

TEST_CASE("selection can be pinned and restored") {
  const simd::Isa before = simd::active().isa;
  simd::select(simd::Isa::Scalar);
  CHECK(simd::active().isa == simd::Isa::Scalar);
  CHECK(simd::isa_name(simd::Isa::Scalar) == "scalar");
  if (!simd::isa_supported(simd::Isa::Neon)) CHECK_THROWS(simd::select(simd::Isa::Neon));
  simd::select(before);
  CHECK(simd::active().isa == before);
}

}
