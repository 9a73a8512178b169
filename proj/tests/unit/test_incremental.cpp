#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/datasets.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/incremental_trainer.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/simplex.hpp"

using namespace ddcl;

namespace {

// Column-major accumulation order, independent of the library loop.
double objective_oracle(const Matrix& Z, const Matrix& P, const std::vector<Matrix>& Qs, const Vec& alpha) {
  double total = 0.0;
  for (std::size_t t = 0; t < Z.cols; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c <= t; ++c)
      for (std::size_t i = 0; i < Z.rows; ++i) {
        double recon = 0.0;
        for (std::size_t j = 0; j < P.cols; ++j) recon += Qs[t](i, j) * P(c, j);
        s += (Z(i, c) - recon) * (Z(i, c) - recon);
      }
    total += alpha[t] * s / static_cast<double>(Z.rows);
  }
  return total;
}

}  // namespace

TEST_CASE("Widrow-Hoff step is an LMS update followed by projection") {
  Rng rng(80);
  for (int it = 0; it < 200; ++it) {
    const std::size_t k = 2 + rng.below(6);
    const Vec q = oracle::random_simplex(k, rng);
    const Vec r = oracle::random_matrix(k, 1, rng).data;
    const double z = rng.normal(), mu = 0.01 + rng.uniform();
    double pred = 0.0;
    for (std::size_t j = 0; j < k; ++j) pred += r[j] * q[j];
    Vec raw(k);
    for (std::size_t j = 0; j < k; ++j) raw[j] = q[j] + mu * (z - pred) * r[j];
    const Vec expect = oracle::simplex_active_set(raw);
    double moved = -1.0;
    const Vec got = widrow_hoff_step(q, r, z, mu, &moved);
    CHECK(on_simplex(got));
    double mv = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(got[j] == doctest::Approx(expect[j]).epsilon(1e-10));
      mv = std::max(mv, std::abs(got[j] - raw[j]));
    }
    CHECK(moved == doctest::Approx(mv).epsilon(1e-10));
  }
  CHECK_THROWS_AS(widrow_hoff_step(Vec{0.5, 0.5}, Vec{1.0}, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("incremental objective matches a naive triple loop") {
  Rng rng(81);
  for (int it = 0; it < 20; ++it) {
    const std::size_t n = 3 + rng.below(5), d = 1 + rng.below(5), k = 2 + rng.below(3);
    const Matrix Z = oracle::random_matrix(n, d, rng), P = oracle::random_matrix(d, k, rng);
    std::vector<Matrix> Qs;
    for (std::size_t t = 0; t < d; ++t) Qs.push_back(oracle::random_assignments(n, k, rng));
    const Vec alpha = default_alpha(d);
    CHECK(alpha.back() == doctest::Approx(1.0));
    CHECK(incremental_objective(Z, P, Qs, alpha) == doctest::Approx(objective_oracle(Z, P, Qs, alpha)).epsilon(1e-12));
  }
}

TEST_CASE("batching covers the stream in order") {
  std::vector<std::size_t> order(23);
  for (std::size_t i = 0; i < 23; ++i) order[i] = 22 - i;
  const auto b = make_batches(order, 5);
  REQUIRE(b.size() == 5);
  CHECK(b[4].size() == 3);
  CHECK(b[0][0] == 22);
  CHECK(b[4][2] == 0);
}

TEST_CASE("single-pass streaming on blobs") {
  const LabeledDataset ds = make_blobs(400, 4, 10.0, 1.0, 100, 8.0);
  const Matrix Z = standardize(ds.X);
  Rng rng(5);
  const auto order = rng.permutation(400);
  StreamConfig c;
  c.k = 4;
  c.B = 40;
  c.init = StreamInit::FirstBatchSamples;
  c.seed = 1;
  const StreamResult r = stream_train(Z, order, &ds.y, c);
  CHECK(r.simplex_violations == 0);
  CHECK(r.wh_steps > 0);
  CHECK(r.consumed == order);
  CHECK(r.trace.rows.size() == 10);
  CHECK(r.trace.rows.back().samples_seen == 400);
  CHECK(r.final_S >= r.first_S);
  CHECK(clustering_accuracy(ds.y, r.labels) > 0.8);
  for (std::size_t i = 0; i < 400; ++i) CHECK(on_simplex(r.state.Q.row(i), 1e-9));
}

TEST_CASE("row-append path and stream validation") {
  const LabeledDataset ds = make_blobs(120, 3, 10.0, 1.0, 9, 6.0);
  const Matrix Z = standardize(ds.X);
  std::vector<std::size_t> order(120);
  for (std::size_t i = 0; i < 120; ++i) order[i] = i;
  StreamConfig c;
  c.k = 3;
  c.B = 30;
  c.path = StreamPath::RowAppend;
  const StreamResult r = stream_train(Z, order, nullptr, c);
  CHECK(r.simplex_violations == 0);
  CHECK(r.labels.size() == 120);
  std::vector<std::vector<std::size_t>> dup{{0, 1, 2, 3}, {3, 4}};
  CHECK_THROWS_AS(stream_train_batches(Z, dup, nullptr, c), DataError);
  std::vector<std::vector<std::size_t>> with_empty{{0, 1, 2, 3, 5, 6}, {}, {7, 8, 9}};
  const StreamResult e = stream_train_batches(Z, with_empty, nullptr, c);
  CHECK(e.skipped_batches == 1);
  c.mu = 0.0;
  CHECK_THROWS_AS(stream_train(Z, order, nullptr, c), ConfigError);
}
