#pragma once

#include <cstddef>

namespace ddcl::kernels {

enum class Level { Scalar, Avx2, Neon };

struct Table {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sqdist)(const double* a, const double* b, std::size_t n);
  double (*sqnorm)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  Level level;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sqnorm(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(DDCL_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sqnorm(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(DDCL_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sqnorm(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace neon
#endif

// Active table. Picked once from CPU features; DDCL_SIMD=scalar forces the
// reference kernels.
const Table& active();
const Table& table_for(Level level);
bool available(Level level);
// Override for tests and benchmarks. Returns false if the level is unsupported.
bool select(Level level);
const char* level_name(Level level);

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sqdist(const double* a, const double* b, std::size_t n) { return active().sqdist(a, b, n); }
inline double sqnorm(const double* a, std::size_t n) { return active().sqnorm(a, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }

}  // namespace ddcl::kernels
