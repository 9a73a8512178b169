#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/kernels.hpp"

using namespace ddcl;

namespace {

double ref_dot(const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("scalar kernels match long double references") {
  Rng rng(10);
  for (std::size_t n : {0, 1, 3, 4, 7, 8, 17, 64, 129}) {
    Vec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    Vec diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    CHECK(kernels::scalar::dot(a.data(), b.data(), n) == doctest::Approx(ref_dot(a, b)).epsilon(1e-12));
    CHECK(kernels::scalar::sqnorm(a.data(), n) == doctest::Approx(ref_dot(a, a)).epsilon(1e-12));
    CHECK(kernels::scalar::sqdist(a.data(), b.data(), n) == doctest::Approx(ref_dot(diff, diff)).epsilon(1e-12));
  }
}

TEST_CASE("every available SIMD level agrees with scalar") {
  Rng rng(11);
  const kernels::Table& ref = kernels::table_for(kernels::Level::Scalar);
  for (auto lv : {kernels::Level::Avx2, kernels::Level::Neon}) {
    if (!kernels::available(lv)) continue;
    const kernels::Table& t = kernels::table_for(lv);
    CHECK(t.level == lv);
    for (std::size_t n = 0; n < 70; ++n) {
      Vec a(n), b(n), y1(n), y2(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
        y1[i] = y2[i] = rng.normal();
      }
      const double scale = 1.0 + ref.sqnorm(a.data(), n) + ref.sqnorm(b.data(), n);
      CHECK(std::abs(t.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
      CHECK(std::abs(t.sqnorm(a.data(), n) - ref.sqnorm(a.data(), n)) <= 1e-13 * scale);
      CHECK(std::abs(t.sqdist(a.data(), b.data(), n) - ref.sqdist(a.data(), b.data(), n)) <= 1e-13 * scale);
      t.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("runtime selection switches the active table") {
  const kernels::Level before = kernels::active().level;
  REQUIRE(kernels::select(kernels::Level::Scalar));
  CHECK(kernels::active().level == kernels::Level::Scalar);
  const Vec a{1, 2, 3}, b{4, 5, 6};
  CHECK(kernels::dot(a.data(), b.data(), 3) == 32.0);
  CHECK(kernels::sqdist(a.data(), b.data(), 3) == 27.0);
  CHECK(std::string(kernels::level_name(kernels::Level::Scalar)) == "scalar");
  kernels::select(before);
  CHECK(kernels::active().level == before);
}
