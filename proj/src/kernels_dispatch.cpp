#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "facelap/kernels.hpp"

namespace facelap::simd {

#if defined(FACELAP_HAVE_AVX2)
const KernelTable* avx2_kernels_impl();
#endif
#if defined(FACELAP_HAVE_NEON)
const KernelTable* neon_kernels_impl();
#endif

const KernelTable* avx2_kernels() {
#if defined(FACELAP_HAVE_AVX2)
  return avx2_kernels_impl();
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(FACELAP_HAVE_NEON)
  return neon_kernels_impl();
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FACELAP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
      // Advanced SIMD is mandatory on aarch64.
      return neon_kernels() != nullptr;
  }
  return false;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

namespace {

const KernelTable& table_for(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return *avx2_kernels();
    case Isa::Neon:
      return *neon_kernels();
    case Isa::Scalar:
      break;
  }
  return scalar_kernels();
}

const KernelTable* detect() {
  if (const char* env = std::getenv("FACELAP_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_supported(isa)) return &table_for(isa);
    }
  }
  if (isa_supported(Isa::Avx2)) return &table_for(Isa::Avx2);
  if (isa_supported(Isa::Neon)) return &table_for(Isa::Neon);
  return &scalar_kernels();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = detect();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  }
  g_active.store(&table_for(isa), std::memory_order_release);
}

}  // namespace facelap::simd
