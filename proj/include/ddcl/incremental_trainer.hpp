#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ddcl/batch_trainer.hpp"
#include "ddcl/matrix.hpp"

namespace ddcl {

// e = z_t - r^T q; returns project(q + mu e r). `moved` receives the
// infinity-norm distance between the raw and the projected vector.
Vec widrow_hoff_step(std::span<const double> q_prev, std::span<const double> r, double z_t, double mu,
                     double* moved = nullptr);

// sum_t alpha_t (1/N) sum_n |z_{n,1:t} - P_{1:t} q_n^(t)|^2 with Q_per_t[t-1]
// holding q^(t) for every sample (n x k).
double incremental_objective(const Matrix& Z, const Matrix& P, const std::vector<Matrix>& Q_per_t,
                             std::span<const double> alpha);
// alpha_t = t / d
Vec default_alpha(std::size_t d);

enum class StreamInit { FirstBatchMean, FirstBatchSamples };
enum class StreamPath { BatchGradient, RowAppend };

struct StreamConfig {
  std::size_t k = 10;
  std::size_t B = 50;
  double T0 = 2.0;
  double T_min = 0.3;
  double tau = 30.0;  // in batches
  double lr = 2.0;    // prototype step on the batch L_q
  double mu = 0.05;   // Widrow-Hoff step
  double init_noise = 0.01;
  StreamInit init = StreamInit::FirstBatchMean;
  StreamPath path = StreamPath::BatchGradient;
  bool refine = true;  // Widrow-Hoff sweep over feature rows per sample
  std::uint64_t seed = 0;
};

struct StreamState {
  Matrix P;                // d x k
  Matrix Q;                // n x k, stored assignment per sample (uniform until seen)
  std::size_t step = 0;    // batches consumed
  double T = 0.0;
  double mu = 0.0;
};

struct StreamResult {
  StreamState state;
  TrainTrace trace;  // one row per batch, samples_seen filled
  std::vector<int> labels;  // hard assignment of every sample against the final P
  std::vector<std::size_t> consumed;  // sample indices in consumption order
  long wh_steps = 0;
  long simplex_violations = 0;
  int mu_halvings = 0;
  int skipped_batches = 0;
  double first_S = 0.0, final_S = 0.0;
};

// Single pass over Z in the row order `order`, batches of cfg.B.
StreamResult stream_train(const Matrix& Z, const std::vector<std::size_t>& order, const std::vector<int>* y,
                          const StreamConfig& cfg);

// Convenience: splits `order` into explicit batches (the last may be short).
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t B);

// Same loop over explicit batches; empty batches are skipped.
StreamResult stream_train_batches(const Matrix& Z, const std::vector<std::vector<std::size_t>>& batches,
                                  const std::vector<int>* y, const StreamConfig& cfg);

}  // namespace ddcl
