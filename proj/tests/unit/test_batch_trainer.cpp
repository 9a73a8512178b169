#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/backbone.hpp"
#include "ddcl/batch_trainer.hpp"
#include "ddcl/datasets.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"

using namespace ddcl;

namespace {

RunConfig blobs_config() {
  RunConfig c;
  c.k = 4;
  c.T0 = c.T_min = 0.5;
  c.tau = 1.0;
  c.lr_dcl = 0.1;
  c.epochs = 150;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("annealing schedule and separation ramp") {
  CHECK(anneal(2.0, 0.5, 80.0, 0.0) == doctest::Approx(2.0));
  CHECK(anneal(2.0, 0.5, 80.0, 40.0) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(anneal(2.0, 0.5, 80.0, 1000.0) == doctest::Approx(0.5));
  RunConfig c;
  c.eta = 0.2;
  c.eta_ramp_epochs = 10;
  CHECK(eta_at(c, 0) == doctest::Approx(0.0));
  CHECK(eta_at(c, 5) == doctest::Approx(0.1));
  CHECK(eta_at(c, 50) == doctest::Approx(0.2));
}

TEST_CASE("configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.T0 = 0.1;
  c.T_min = 0.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.k = 3;
  c.eta = 0.1;
  c.lambda = 0.5;
  c.lyapunov_check = true;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.lambda = 0.7;
  CHECK_NOTHROW(validate(c));
  CHECK(parse_main_loss("ols") == MainLoss::LOLS);
  CHECK(std::string(main_loss_name(MainLoss::Lq)) == "lq");
  CHECK_THROWS_AS(parse_main_loss("mse"), ConfigError);
}

TEST_CASE("frozen-feature training separates blobs") {
  const LabeledDataset ds = make_blobs(400, 4, 10.0, 1.0, 100, 8.0);
  const Matrix Z = standardize(ds.X);
  const TrainResult r = train(Z, &ds.y, blobs_config());
  CHECK(r.trace.rows.size() == 150);
  CHECK(r.labels.size() == 400);
  CHECK(clustering_accuracy(ds.y, r.labels) > 0.99);
  CHECK(r.trace.v_violations() == 0);
  CHECK_FALSE(detect_collapse(r.trace, r.P_init, r.P).collapsed);
  for (const auto& row : r.trace.rows) {
    CHECK(row.l_q == doctest::Approx(row.l_ols + row.v).epsilon(1e-10));
    CHECK(std::isfinite(row.acc));
  }
  const TrainResult again = train(Z, &ds.y, blobs_config());
  CHECK(max_abs_diff(r.P, again.P) == 0.0);
}

TEST_CASE("dual mode keeps prototypes tied to the features") {
  const LabeledDataset ds = make_blobs(120, 3, 10.0, 1.0, 5, 6.0);
  const Matrix Z = standardize(ds.X);
  RunConfig c = blobs_config();
  c.k = 3;
  c.epochs = 40;
  c.prototype_mode = PrototypeMode::Dual;
  c.lr_dcl = 0.9;
  const TrainResult r = train(Z, nullptr, c);
  REQUIRE(r.W2.rows == 120);
  CHECK(max_abs_diff(r.P, matmul_tn(Z, r.W2)) < 1e-10);
  CHECK(std::isnan(r.trace.rows.back().acc));
  c.batch_size = 32;
  CHECK_THROWS_AS(train(Z, nullptr, c), ConfigError);
}

TEST_CASE("minibatch direct training runs and records one row per epoch") {
  const LabeledDataset ds = make_blobs(200, 3, 10.0, 1.0, 6, 6.0);
  RunConfig c = blobs_config();
  c.k = 3;
  c.epochs = 20;
  c.batch_size = 32;
  const TrainResult r = train(standardize(ds.X), &ds.y, c);
  CHECK(r.trace.rows.size() == 20);
  CHECK(r.trace.rows.back().epoch == 19);
}

TEST_CASE("end-to-end training with a backbone") {
  const LabeledDataset ds = make_blobs(256, 3, 10.0, 1.0, 7, 6.0);
  Rng rng(8);
  MlpParams bb = mlp_init(MlpSpec{{2, 16, 8}, true, true}, rng);
  RunConfig c;
  c.k = 3;
  c.T0 = 2.0;
  c.T_min = 0.5;
  c.tau = 10.0;
  c.lr_backbone = 0.01;
  c.lr_dcl = 0.05;
  c.lambda = 1e-3;
  c.epochs = 5;
  c.batch_size = 64;
  c.stop_gradient = false;
  const TrainResult r = train(standardize(ds.X), &ds.y, c, bb);
  CHECK(r.trace.rows.size() == 5);
  CHECK(r.features.rows == 256);
  CHECK(r.features.cols == 8);
  CHECK(r.labels.size() == 256);
  for (double v : r.P.data) CHECK(std::isfinite(v));
}

TEST_CASE("collapse verdict, feedback correlation and stability margin") {
  TrainTrace t;
  for (int e = 0; e < 5; ++e) {
    TraceRow row;
    row.epoch = e;
    row.s = 1.0 + e;
    row.k_mean = 1.0 - 0.1 * e;
    t.rows.push_back(row);
  }
  CHECK(feedback_correlation(t) == doctest::Approx(-1.0));
  const Matrix P0(1, 2, {0.0, 1.0}), Pc(1, 2, {0.5, 0.5 + 1e-5});
  CHECK(detect_collapse(t, P0, Pc).collapsed);
  CHECK_FALSE(detect_collapse(t, P0, P0).collapsed);
  t.rows[2].v = -1e-9;
  CHECK(t.v_violations() == 1);
  const StabilityMargin m = stability_margin(Matrix(1, 2, {3.0, 4.0}), 1.0, 2.0, 0.01, 0.1);
  CHECK(m.ratio_bound == doctest::Approx(1.0 + 4.0 * 5.0 / 2.0));
  CHECK(m.ok);
  CHECK_FALSE(stability_margin(Matrix(1, 2, {3.0, 4.0}), 1.0, 2.0, 100.0, 0.1).ok);
}
