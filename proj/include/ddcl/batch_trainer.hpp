#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ddcl/backbone.hpp"
#include "ddcl/dcl.hpp"
#include "ddcl/gradients.hpp"
#include "ddcl/matrix.hpp"

namespace ddcl {

struct RunConfig {
  std::size_t k = 2;
  double T0 = 1.0;
  double T_min = 1.0;
  double tau = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  int eta_ramp_epochs = 0;  // linear 0 -> eta over these epochs; 0 = constant
  double lambda = 0.0;
  double lr_backbone = 0.01;
  double lr_dcl = 0.1;
  double momentum = 0.0;  // backbone SGD
  int epochs = 200;
  std::uint64_t seed = 0;
  bool stop_gradient = true;
  MainLoss loss_kind = MainLoss::Lq;
  PrototypeMode prototype_mode = PrototypeMode::Direct;
  int entropy_sign = -1;
  std::size_t batch_size = 0;  // 0 = full batch
  // Dual mode: scale the W2 step by 1 / lambda_max(X X^T).
  bool dual_normalize = true;
  bool lyapunov_check = false;  // enforce lambda > 2 eta C(k,2)
  // Epoch-indexed phase switches.
  int stop_gradient_warmup = 0;  // stop-gradient forced for epochs < this
  int backbone_freeze = 0;       // backbone not updated for epochs < this
  bool record_metrics = true;
};

void validate(const RunConfig& cfg);
const char* main_loss_name(MainLoss m);
MainLoss parse_main_loss(const std::string& s);

double anneal(double T0, double T_min, double tau, double epoch);
// Effective eta at an epoch under the linear ramp.
double eta_at(const RunConfig& cfg, int epoch);

struct TraceRow {
  double epoch = 0;
  double T = 0, l_q = 0, l_ols = 0, v = 0, s = 0, k_mean = 0, i_mean = 0, grad_pv_norm = 0;
  double acc = std::numeric_limits<double>::quiet_NaN();
  double nmi = std::numeric_limits<double>::quiet_NaN();
  double ari = std::numeric_limits<double>::quiet_NaN();
  double samples_seen = -1;  // streaming only
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  Vec column(const std::string& name) const;
  int v_violations(double slack = 1e-12) const;
};

struct CollapseVerdict {
  bool collapsed = false;
  double final_S = 0.0;
  double threshold = 0.0;
};

// collapsed iff S(P_final) < max(1e-6, 1e-3 S(P_init)).
CollapseVerdict detect_collapse(const TrainTrace& trace, const Matrix& P_init, const Matrix& P_final);

// Pearson correlation of the s and k_mean columns.
double feedback_correlation(const TrainTrace& trace);

struct StabilityMargin {
  double ratio_bound = 0.0;
  double current_ratio = 0.0;
  bool ok = true;
};

// bound = 1 + 4 |P|_F / (T jnorm); ok iff lr_backbone / lr_dcl < bound.
StabilityMargin stability_margin(const Matrix& P, double T, double jacobian_norm, double lr_backbone, double lr_dcl);

struct TrainResult {
  Matrix P_init, P;  // d x k
  Matrix W2;         // dual mode only
  Matrix Q;          // n x k at the final temperature
  std::vector<int> labels;
  TrainTrace trace;
  Matrix features;   // final features (eval mode when a backbone is used)
};

// Frozen features Z (n x d). Each trace row holds the losses at the start of
// the epoch and S after the epoch's update.
TrainResult train(const Matrix& Z, const std::vector<int>* y, const RunConfig& cfg);

// End-to-end: features = backbone(X). Mini-batches of cfg.batch_size drawn by
// a seeded permutation; the ragged tail of each epoch is dropped. Diagnostics
// use eval-mode features of the whole set after each epoch.
TrainResult train(const Matrix& X, const std::vector<int>* y, const RunConfig& cfg, MlpParams& backbone);

}  // namespace ddcl
