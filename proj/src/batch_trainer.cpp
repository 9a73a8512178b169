#include "ddcl/batch_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddcl/assignment.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/rng.hpp"

namespace ddcl {

const char* main_loss_name(MainLoss m) { return m == MainLoss::Lq ? "lq" : "ols"; }

MainLoss parse_main_loss(const std::string& s) {
  if (s == "lq" || s == "Lq" || s == "L_q") return MainLoss::Lq;
  if (s == "ols" || s == "LOLS" || s == "L_OLS") return MainLoss::LOLS;
  throw ConfigError("unknown loss kind '" + s + "' (expected lq or ols)");
}

void validate(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw ConfigError("RunConfig: " + m); };
  if (c.k < 1) bad("k must be >= 1");
  if (!(c.T_min > 0.0)) bad("T_min must be > 0");
  if (!(c.T0 >= c.T_min)) bad("T0 must be >= T_min");
  if (!(c.tau > 0.0)) bad("tau must be > 0");
  if (!(c.lr_backbone > 0.0) || !(c.lr_dcl > 0.0)) bad("learning rates must be > 0");
  if (c.beta < 0 || c.gamma < 0 || c.eta < 0 || c.lambda < 0) bad("loss weights must be non-negative");
  if (c.entropy_sign != 1 && c.entropy_sign != -1) bad("entropy_sign must be +1 or -1");
  if (c.epochs < 1) bad("epochs must be >= 1");
  if (c.eta_ramp_epochs < 0) bad("eta_ramp_epochs must be >= 0");
  if (c.momentum < 0.0 || c.momentum >= 1.0) bad("momentum must lie in [0, 1)");
  if (c.lyapunov_check) {
    const double pairs = 0.5 * static_cast<double>(c.k) * static_cast<double>(c.k - 1);
    if (!(c.lambda > 2.0 * c.eta * pairs))
      bad("lambda=" + std::to_string(c.lambda) + " violates lambda > 2 eta k(k-1)/2 = " +
          std::to_string(2.0 * c.eta * pairs));
  }
}

double anneal(double T0, double T_min, double tau, double epoch) { return std::max(T0 * std::exp(-epoch / tau), T_min); }

double eta_at(const RunConfig& cfg, int epoch) {
  if (cfg.eta_ramp_epochs <= 0) return cfg.eta;
  return cfg.eta * std::min(1.0, static_cast<double>(epoch) / static_cast<double>(cfg.eta_ramp_epochs));
}

Vec TrainTrace::column(const std::string& name) const {
  Vec out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double v;
    if (name == "epoch") v = r.epoch;
    else if (name == "T") v = r.T;
    else if (name == "l_q") v = r.l_q;
    else if (name == "l_ols") v = r.l_ols;
    else if (name == "v") v = r.v;
    else if (name == "s") v = r.s;
    else if (name == "k_mean") v = r.k_mean;
    else if (name == "i_mean") v = r.i_mean;
    else if (name == "grad_pv_norm") v = r.grad_pv_norm;
    else if (name == "acc") v = r.acc;
    else if (name == "nmi") v = r.nmi;
    else if (name == "ari") v = r.ari;
    else if (name == "samples_seen") v = r.samples_seen;
    else throw std::invalid_argument("TrainTrace: unknown column '" + name + "'");
    out.push_back(v);
  }
  return out;
}

int TrainTrace::v_violations(double slack) const {
  int c = 0;
  for (const auto& r : rows) c += r.v < -slack;
  return c;
}

CollapseVerdict detect_collapse(const TrainTrace& trace, const Matrix& P_init, const Matrix& P_final) {
  if (trace.rows.empty()) throw std::invalid_argument("detect_collapse: empty trace");
  CollapseVerdict v;
  v.final_S = P_final.cols >= 2 ? separation(P_final) : 0.0;
  const double s0 = P_init.cols >= 2 ? separation(P_init) : 0.0;
  v.threshold = std::max(1e-6, 1e-3 * s0);
  v.collapsed = v.final_S < v.threshold;
  return v;
}

double feedback_correlation(const TrainTrace& trace) {
  const Vec s = trace.column("s"), k = trace.column("k_mean");
  return pearson_corr(s, k);
}

StabilityMargin stability_margin(const Matrix& P, double T, double jacobian_norm, double lr_backbone, double lr_dcl) {
  if (!(T > 0.0)) throw std::invalid_argument("stability_margin: T must be > 0");
  StabilityMargin m;
  m.current_ratio = lr_backbone / lr_dcl;
  if (!(jacobian_norm > 0.0)) {
    m.ratio_bound = std::numeric_limits<double>::infinity();
    m.ok = true;
    return m;
  }
  m.ratio_bound = 1.0 + 4.0 * frobenius_norm(P) / (T * jacobian_norm);
  m.ok = m.current_ratio < m.ratio_bound;
  return m;
}

namespace {

ObjectiveSpec make_spec(const RunConfig& cfg, int epoch, double T, bool need_dZ) {
  ObjectiveSpec s;
  s.main = cfg.loss_kind;
  s.weights.beta = cfg.beta;
  s.weights.gamma = cfg.gamma;
  s.weights.eta = eta_at(cfg, epoch);
  s.weights.lambda = cfg.lambda;
  s.weights.entropy_sign = cfg.entropy_sign;
  s.T = T;
  s.stop_gradient = cfg.stop_gradient || epoch < cfg.stop_gradient_warmup;
  s.need_dZ = need_dZ;
  return s;
}

void require_finite(const LossBreakdown& b, int epoch) {
  const std::pair<const char*, double> terms[] = {{"l_q", b.l_q},     {"l_ols", b.l_ols}, {"v", b.v},
                                                  {"l_bal", b.l_bal}, {"l_ent", b.l_ent}, {"l_sep", b.l_sep},
                                                  {"l_quad", b.l_quad}};
  for (const auto& [name, v] : terms)
    if (!std::isfinite(v))
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ": first non-finite term is " + name);
}

// Mean of diag(q) - q q^T over rows of Q, then |2 P Sigma|_F.
double grad_pv_norm(const Matrix& P, const Matrix& Q) {
  const std::size_t k = Q.cols;
  Matrix S(k, k);
  for (std::size_t i = 0; i < Q.rows; ++i) {
    const double* q = Q.row_ptr(i);
    for (std::size_t a = 0; a < k; ++a) {
      S(a, a) += q[a];
      for (std::size_t b = 0; b < k; ++b) S(a, b) -= q[a] * q[b];
    }
  }
  const double inv = 1.0 / static_cast<double>(Q.rows);
  for (double& v : S.data) v *= 2.0 * inv;
  return frobenius_norm(matmul(P, S));
}

TraceRow diagnostics(int epoch, double T, const Matrix& Z, const Matrix& P, const Matrix& Q, const std::vector<int>* y,
                     const RunConfig& cfg) {
  LossWeights w;
  w.beta = cfg.beta;
  w.gamma = cfg.gamma;
  w.eta = eta_at(cfg, epoch);
  w.lambda = cfg.lambda;
  w.entropy_sign = cfg.entropy_sign;
  const LossBreakdown b = total_loss(Z, P, Q, w);
  require_finite(b, epoch);
  TraceRow r;
  r.epoch = epoch;
  r.T = T;
  r.l_q = b.l_q;
  r.l_ols = b.l_ols;
  r.v = b.v;
  double km = 0.0;
  for (std::size_t i = 0; i < Q.rows; ++i) km += concentration(Q.row(i));
  r.k_mean = km / static_cast<double>(Q.rows);
  r.i_mean = 1.0 - r.k_mean;
  r.grad_pv_norm = grad_pv_norm(P, Q);
  if (cfg.record_metrics && y && !y->empty()) {
    const ClusterScores s = score_all(*y, argmax_rows(Q));
    r.acc = s.acc;
    r.nmi = s.nmi;
    r.ari = s.ari;
  }
  return r;
}

double gram_lambda_max(const Matrix& X) {
  return X.cols <= X.rows ? sym_lambda_max(matmul_tn(X, X)) : sym_lambda_max(matmul_nt(X, X));
}

Matrix one_hot_w2(std::size_t n, const std::vector<std::size_t>& idx) {
  Matrix W(n, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) W(idx[j], j) = 1.0;
  return W;
}

Matrix gather(const Matrix& X, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), X.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(X.row_ptr(idx[i]), X.row_ptr(idx[i]) + X.cols, out.row_ptr(i));
  return out;
}

Matrix prototypes_from(const Matrix& Z, const std::vector<std::size_t>& idx) { return transpose(gather(Z, idx)); }

void check_labels(const Matrix& Z, const std::vector<int>* y) {
  if (y && !y->empty() && y->size() != Z.rows)
    throw DataError("labels have length " + std::to_string(y->size()) + ", expected " + std::to_string(Z.rows));
}

}  // namespace

TrainResult train(const Matrix& Z, const std::vector<int>* y, const RunConfig& cfg) {
  validate(cfg);
  check_labels(Z, y);
  const std::size_t n = Z.rows;
  if (n < cfg.k) throw ConfigError("train: n=" + std::to_string(n) + " < k=" + std::to_string(cfg.k));
  check_finite(Z, "train features");
  const bool dual = cfg.prototype_mode == PrototypeMode::Dual;
  const bool full = cfg.batch_size == 0 || cfg.batch_size >= n;
  if (dual && !full) throw ConfigError("dual prototype mode on frozen features requires full-batch training");

  Rng rng(cfg.seed);
  const auto idx = rng.sample_without_replacement(n, cfg.k);
  TrainResult res;
  Matrix P = prototypes_from(Z, idx);
  Matrix W2;
  double lmax = 1.0;
  if (dual) {
    W2 = one_hot_w2(n, idx);
    P = dcl_forward(Z, W2);
    if (cfg.dual_normalize) lmax = std::max(gram_lambda_max(Z), 1e-300);
  }
  res.P_init = P;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double T = anneal(cfg.T0, cfg.T_min, cfg.tau, epoch);
    TraceRow row;
    if (full) {
      const ObjectiveGrad og = objective_grad(Z, P, make_spec(cfg, epoch, T, false));
      row = diagnostics(epoch, T, Z, P, og.Q, y, cfg);
      check_finite(og.dP, "prototype gradient");
      if (dual) {
        const DclGrads g = dcl_backward(Z, W2, og.dP);
        axpy(-cfg.lr_dcl / lmax, g.w2, W2);
        P = dcl_forward(Z, W2);
      } else {
        axpy(-cfg.lr_dcl, og.dP, P);
      }
    } else {
      const Matrix Q0 = soft_assign_batch(Z, P, T);
      row = diagnostics(epoch, T, Z, P, Q0, y, cfg);
      const auto perm = rng.permutation(n);
      for (std::size_t s = 0; s < n; s += cfg.batch_size) {
        const std::vector<std::size_t> bi(perm.begin() + s, perm.begin() + std::min(n, s + cfg.batch_size));
        const ObjectiveGrad og = objective_grad(gather(Z, bi), P, make_spec(cfg, epoch, T, false));
        check_finite(og.dP, "prototype gradient");
        axpy(-cfg.lr_dcl, og.dP, P);
      }
    }
    row.s = cfg.k >= 2 ? separation(P) : 0.0;
    res.trace.rows.push_back(row);
  }
  const double T_end = anneal(cfg.T0, cfg.T_min, cfg.tau, cfg.epochs - 1);
  res.Q = soft_assign_batch(Z, P, T_end);
  res.labels = hard_assign_batch(Z, P);
  res.P = std::move(P);
  res.W2 = std::move(W2);
  res.features = Z;
  return res;
}

TrainResult train(const Matrix& X, const std::vector<int>* y, const RunConfig& cfg, MlpParams& backbone) {
  validate(cfg);
  check_labels(X, y);
  const std::size_t n = X.rows;
  if (n < cfg.k) throw ConfigError("train: n=" + std::to_string(n) + " < k=" + std::to_string(cfg.k));
  if (X.cols != backbone.in_dim())
    throw ConfigError("train: data has " + std::to_string(X.cols) + " features, backbone expects " +
                      std::to_string(backbone.in_dim()));
  const std::size_t B = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  if (B < 2) throw ConfigError("train: batch norm needs batch_size >= 2");
  if (B < cfg.k) throw ConfigError("train: batch_size must be >= k");
  const bool dual = cfg.prototype_mode == PrototypeMode::Dual;

  Rng rng(cfg.seed);
  SgdState sgd;
  sgd.lr = cfg.lr_backbone;
  sgd.momentum = cfg.momentum;

  const Matrix Z0 = mlp_forward(backbone, X, Mode::Train);
  check_finite(Z0, "initial features");
  const auto idx = rng.sample_without_replacement(n, cfg.k);
  TrainResult res;
  Matrix P = prototypes_from(Z0, idx);
  Matrix W2;
  if (dual) {
    // batch-local W2: one-hot on k positions of each batch
    std::vector<std::size_t> pos(cfg.k);
    for (std::size_t j = 0; j < cfg.k; ++j) pos[j] = j;
    W2 = one_hot_w2(B, pos);
  }
  res.P_init = P;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double T = anneal(cfg.T0, cfg.T_min, cfg.tau, epoch);
    const ObjectiveSpec spec = make_spec(cfg, epoch, T, true);
    const auto perm = rng.permutation(n);
    for (std::size_t s = 0; s + B <= n; s += B) {
      const std::vector<std::size_t> bi(perm.begin() + s, perm.begin() + s + B);
      const Matrix xb = gather(X, bi);
      ForwardCache cache;
      const Matrix zb = mlp_forward(backbone, xb, Mode::Train, &cache);
      if (dual) P = dcl_forward(zb, W2);
      ObjectiveGrad og = objective_grad(zb, P, spec);
      if (!std::isfinite(og.value))
        throw NumericalError("non-finite batch objective at epoch " + std::to_string(epoch) + ": first non-finite term is " +
                             (std::isfinite(frobenius_sq(zb)) ? "l_q" : "features"));
      check_finite(og.dP, "prototype gradient");
      Matrix dZ = std::move(og.dZ);
      if (dual) {
        const DclGrads g = dcl_backward(zb, W2, og.dP);
        axpy(1.0, g.x, dZ);
        const double lm = cfg.dual_normalize ? std::max(gram_lambda_max(zb), 1e-300) : 1.0;
        axpy(-cfg.lr_dcl / lm, g.w2, W2);
      } else {
        axpy(-cfg.lr_dcl, og.dP, P);
      }
      check_finite(dZ, "feature gradient");
      if (epoch >= cfg.backbone_freeze) sgd_step(backbone, mlp_backward(backbone, cache, dZ), sgd);
    }
    const Matrix Z = mlp_forward_const(backbone, X, Mode::Eval);
    check_finite(Z, "features");
    const Matrix Q = soft_assign_batch(Z, P, T);
    TraceRow row = diagnostics(epoch, T, Z, P, Q, y, cfg);
    row.s = cfg.k >= 2 ? separation(P) : 0.0;
    res.trace.rows.push_back(row);
  }
  const double T_end = anneal(cfg.T0, cfg.T_min, cfg.tau, cfg.epochs - 1);
  res.features = mlp_forward_const(backbone, X, Mode::Eval);
  res.Q = soft_assign_batch(res.features, P, T_end);
  res.labels = hard_assign_batch(res.features, P);
  res.P = std::move(P);
  res.W2 = std::move(W2);
  return res;
}

}  // namespace ddcl
