#include "ddcl/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace ddcl::kernels {

namespace {

constexpr Table kScalar{scalar::dot, scalar::sqdist, scalar::sqnorm, scalar::axpy, Level::Scalar};
#if defined(DDCL_HAVE_AVX2)
constexpr Table kAvx2{avx2::dot, avx2::sqdist, avx2::sqnorm, avx2::axpy, Level::Avx2};
#endif
#if defined(DDCL_HAVE_NEON)
constexpr Table kNeon{neon::dot, neon::sqdist, neon::sqnorm, neon::axpy, Level::Neon};
#endif

bool cpu_has_avx2() {
#if defined(DDCL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* detect() {
  const char* env = std::getenv("DDCL_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
#if defined(DDCL_HAVE_AVX2)
  if (cpu_has_avx2()) return &kAvx2;
#endif
#if defined(DDCL_HAVE_NEON)
  return &kNeon;
#endif
  return &kScalar;
}

std::atomic<const Table*>& slot() {
  static std::atomic<const Table*> t{detect()};
  return t;
}

}  // namespace

const Table& active() { return *slot().load(std::memory_order_relaxed); }

bool available(Level level) {
  switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2: return cpu_has_avx2();
#if defined(DDCL_HAVE_NEON)
    case Level::Neon: return true;
#else
    case Level::Neon: return false;
#endif
  }
  return false;
}

const Table& table_for(Level level) {
  switch (level) {
#if defined(DDCL_HAVE_AVX2)
    case Level::Avx2:
      if (cpu_has_avx2()) return kAvx2;
      break;
#endif
#if defined(DDCL_HAVE_NEON)
    case Level::Neon: return kNeon;
#endif
    default: break;
  }
  return kScalar;
}

bool select(Level level) {
  if (!available(level)) return false;
  slot().store(&table_for(level), std::memory_order_relaxed);
  return true;
}

const char* level_name(Level level) {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
    case Level::Neon: return "neon";
  }
  return "?";
}

}  // namespace ddcl::kernels
