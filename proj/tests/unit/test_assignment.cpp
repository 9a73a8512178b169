#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/assignment.hpp"
#include "ddcl/numerics.hpp"

using namespace ddcl;

TEST_CASE("soft assignment is the temperature softmax of negative distances") {
  Rng rng(30);
  for (int it = 0; it < 100; ++it) {
    const Matrix P = oracle::random_matrix(4, 5, rng);
    const Vec z = oracle::random_matrix(4, 1, rng).data;
    const double T = 0.1 + 3.0 * rng.uniform();
    const Vec q = soft_assign(z, P, T), r = oracle::softmax_naive(z, P, T);
    for (std::size_t j = 0; j < 5; ++j) CHECK(q[j] == doctest::Approx(r[j]).epsilon(1e-12));
  }
}

TEST_CASE("temperature limits: hard assignment and uniform") {
  const Matrix P(1, 3, {0.0, 1.0, 5.0});
  const Vec z{0.8};
  const Vec cold = soft_assign(z, P, 1e-4);
  CHECK(cold[1] == doctest::Approx(1.0));
  CHECK(hard_assign(z, P) == 1);
  const Vec hot = soft_assign(z, P, 1e8);
  for (double x : hot) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("batch assignment agrees with the per-sample path") {
  Rng rng(31);
  const Matrix Z = oracle::random_matrix(20, 3, rng), P = oracle::random_matrix(3, 4, rng);
  const Matrix Q = soft_assign_batch(Z, P, 0.7);
  const Matrix Q2 = soft_assign_from_dists(pairwise_sq_dists(Z, P), 0.7);
  CHECK(max_abs_diff(Q, Q2) < 1e-14);
  const auto hard = hard_assign_batch(Z, P);
  const auto am = argmax_rows(Q);
  for (std::size_t i = 0; i < 20; ++i) {
    const Vec q = soft_assign(Z.row(i), P, 0.7);
    for (std::size_t j = 0; j < 4; ++j) CHECK(Q(i, j) == doctest::Approx(q[j]).epsilon(1e-14));
    CHECK(hard[i] == am[i]);
  }
}

TEST_CASE("assignment covariance and feedback scalars") {
  const Vec q{0.2, 0.3, 0.5};
  const Matrix S = sigma(q);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(S(i, j) == doctest::Approx((i == j ? q[i] : 0.0) - q[i] * q[j]));
  CHECK(concentration(q) == doctest::Approx(0.04 + 0.09 + 0.25));
  CHECK(separation_force_trace(q) == doctest::Approx(S(0, 0) + S(1, 1) + S(2, 2)));
}
