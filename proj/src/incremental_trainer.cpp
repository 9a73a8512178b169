#include "ddcl/incremental_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "ddcl/assignment.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/gradients.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/rng.hpp"
#include "ddcl/simplex.hpp"

namespace ddcl {

Vec widrow_hoff_step(std::span<const double> q_prev, std::span<const double> r, double z_t, double mu, double* moved) {
  if (q_prev.size() != r.size()) throw std::invalid_argument("widrow_hoff_step: q and r differ in length");
  if (!(mu > 0.0)) throw std::invalid_argument("widrow_hoff_step: mu must be > 0");
  double pred = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) pred += r[j] * q_prev[j];
  const double e = z_t - pred;
  Vec qt(q_prev.begin(), q_prev.end());
  for (std::size_t j = 0; j < r.size(); ++j) qt[j] += mu * e * r[j];
  Vec q = project_simplex(qt);
  if (moved) {
    double m = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) m = std::max(m, std::abs(q[j] - qt[j]));
    *moved = m;
  }
  return q;
}

double incremental_objective(const Matrix& Z, const Matrix& P, const std::vector<Matrix>& Q_per_t,
                             std::span<const double> alpha) {
  const std::size_t n = Z.rows, d = Z.cols, k = P.cols;
  if (P.rows != d) throw std::invalid_argument("incremental_objective: P rows must equal feature dimension");
  if (alpha.size() != d || Q_per_t.size() != d)
    throw std::invalid_argument("incremental_objective: need one alpha and one Q per feature dimension");
  double total = 0.0;
  for (std::size_t t = 1; t <= d; ++t) {
    const double a = alpha[t - 1];
    if (a < 0.0) throw std::invalid_argument("incremental_objective: alpha must be non-negative");
    if (a == 0.0) continue;
    const Matrix& Q = Q_per_t[t - 1];
    if (Q.rows != n || Q.cols != k) throw std::invalid_argument("incremental_objective: Q shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < t; ++c) {
        double pq = 0.0;
        for (std::size_t j = 0; j < k; ++j) pq += P(c, j) * Q(i, j);
        const double r = Z(i, c) - pq;
        s += r * r;
      }
    total += a * s / static_cast<double>(n);
  }
  return total;
}

Vec default_alpha(std::size_t d) {
  Vec a(d);
  for (std::size_t t = 1; t <= d; ++t) a[t - 1] = static_cast<double>(t) / static_cast<double>(d);
  return a;
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t B) {
  if (B < 1) throw std::invalid_argument("make_batches: B must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < order.size(); s += B)
    out.emplace_back(order.begin() + s, order.begin() + std::min(order.size(), s + B));
  return out;
}

namespace {

Matrix gather(const Matrix& X, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), X.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(X.row_ptr(idx[i]), X.row_ptr(idx[i]) + X.cols, out.row_ptr(i));
  return out;
}

Matrix init_prototypes(const Matrix& zb, const StreamConfig& cfg, Rng& rng) {
  const std::size_t d = zb.cols, k = cfg.k;
  Matrix P(d, k);
  if (cfg.init == StreamInit::FirstBatchSamples) {
    if (zb.rows < k) throw ConfigError("stream_train: first batch smaller than k for sample init");
    const auto pick = rng.sample_without_replacement(zb.rows, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) P(c, j) = zb(pick[j], c);
    return P;
  }
  const Vec mu = col_means(zb);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t j = 0; j < k; ++j) P(c, j) = mu[c] + cfg.init_noise * rng.normal();
  return P;
}

}  // namespace

StreamResult stream_train_batches(const Matrix& Z, const std::vector<std::vector<std::size_t>>& batches,
                                  const std::vector<int>* y, const StreamConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("stream_train: k must be >= 1");
  if (cfg.B < 1) throw ConfigError("stream_train: B must be >= 1");
  if (!(cfg.mu > 0.0)) throw ConfigError("stream_train: mu must be > 0");
  if (!(cfg.T_min > 0.0) || cfg.T0 < cfg.T_min || !(cfg.tau > 0.0)) throw ConfigError("stream_train: invalid temperature schedule");
  if (!(cfg.lr > 0.0)) throw ConfigError("stream_train: lr must be > 0");
  check_finite(Z, "stream features");
  const std::size_t n = Z.rows, d = Z.cols, k = cfg.k;
  Rng rng(cfg.seed);
  StreamResult res;
  StreamState& st = res.state;
  st.mu = cfg.mu;
  st.Q = Matrix(n, k);
  for (double& v : st.Q.data) v = 1.0 / static_cast<double>(k);
  std::vector<char> seen(n, 0);
  bool have_P = false;

  for (const auto& batch : batches) {
    if (batch.empty()) {
      ++res.skipped_batches;
      std::fprintf(stderr, "warning: stream_train skipped an empty batch at step %zu\n", st.step);
      continue;
    }
    for (std::size_t i : batch) {
      if (i >= n) throw DataError("stream_train: sample index out of range");
      if (seen[i]) throw DataError("stream_train: sample " + std::to_string(i) + " appears twice in the stream");
      seen[i] = 1;
      res.consumed.push_back(i);
    }
    const Matrix zb = gather(Z, batch);
    if (!have_P) {
      st.P = init_prototypes(zb, cfg, rng);
      have_P = true;
    }
    st.T = anneal(cfg.T0, cfg.T_min, cfg.tau, static_cast<double>(st.step));

    if (cfg.path == StreamPath::BatchGradient) {
      ObjectiveSpec spec;
      spec.main = MainLoss::Lq;
      spec.T = st.T;
      const ObjectiveGrad og = objective_grad(zb, st.P, spec);
      check_finite(og.dP, "stream prototype gradient");
      axpy(-cfg.lr, og.dP, st.P);
    }

    // Row pass over feature dimensions. RowAppend builds P row by row from the
    // DCL output with W2 = column-normalized batch assignments.
    Matrix W2;
    Matrix Pnew;
    if (cfg.path == StreamPath::RowAppend) {
      W2 = soft_assign_batch(zb, st.P, st.T);
      for (std::size_t j = 0; j < k; ++j) {
        double cs = 0.0;
        for (std::size_t i = 0; i < W2.rows; ++i) cs += W2(i, j);
        if (cs > 0.0)
          for (std::size_t i = 0; i < W2.rows; ++i) W2(i, j) /= cs;
      }
      Pnew = Matrix(d, k);
    }
    std::vector<Vec> qs(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
      if (cfg.path == StreamPath::RowAppend) {
        const auto q0 = st.Q.row(batch[b]);
        qs[b].assign(q0.begin(), q0.end());
      } else {
        qs[b] = soft_assign(zb.row(b), st.P, st.T);
      }
    Vec r(k);
    for (std::size_t t = 0; t < d; ++t) {
      if (cfg.path == StreamPath::RowAppend) {
        for (std::size_t j = 0; j < k; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < zb.rows; ++i) s += zb(i, t) * W2(i, j);
          r[j] = s;
        }
      } else {
        for (std::size_t j = 0; j < k; ++j) r[j] = st.P(t, j);
      }
      if (cfg.refine || cfg.path == StreamPath::RowAppend) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
          double moved = 0.0;
          qs[b] = widrow_hoff_step(qs[b], r, zb(b, t), st.mu, &moved);
          ++res.wh_steps;
          if (!on_simplex(qs[b], 1e-9)) ++res.simplex_violations;
          if (moved > 0.5) {
            st.mu *= 0.5;
            ++res.mu_halvings;
            std::fprintf(stderr, "info: widrow-hoff step halved to %g (projection moved %.3g)\n", st.mu, moved);
          }
        }
      }
      if (cfg.path == StreamPath::RowAppend)
        for (std::size_t j = 0; j < k; ++j) Pnew(t, j) = r[j];
    }
    if (cfg.path == StreamPath::RowAppend) st.P = std::move(Pnew);
    for (std::size_t b = 0; b < batch.size(); ++b) std::copy(qs[b].begin(), qs[b].end(), st.Q.row_ptr(batch[b]));
    check_finite(st.P, "stream prototypes");

    TraceRow row;
    row.epoch = static_cast<double>(st.step);
    row.T = st.T;
    const Matrix Qb = soft_assign_batch(zb, st.P, st.T);
    const LossBreakdown lb = total_loss(zb, st.P, Qb, LossWeights{});
    row.l_q = lb.l_q;
    row.l_ols = lb.l_ols;
    row.v = lb.v;
    double km = 0.0;
    for (std::size_t i = 0; i < Qb.rows; ++i) km += concentration(Qb.row(i));
    row.k_mean = km / static_cast<double>(Qb.rows);
    row.i_mean = 1.0 - row.k_mean;
    {
      Matrix S(k, k);
      for (std::size_t i = 0; i < Qb.rows; ++i)
        for (std::size_t a = 0; a < k; ++a) {
          S(a, a) += Qb(i, a);
          for (std::size_t c = 0; c < k; ++c) S(a, c) -= Qb(i, a) * Qb(i, c);
        }
      for (double& v : S.data) v *= 2.0 / static_cast<double>(Qb.rows);
      row.grad_pv_norm = frobenius_norm(matmul(st.P, S));
    }
    row.s = k >= 2 ? separation(st.P) : 0.0;
    row.samples_seen = static_cast<double>(res.consumed.size());
    if (y && !y->empty()) {
      const Matrix Zs = gather(Z, res.consumed);
      const auto lab = hard_assign_batch(Zs, st.P);
      std::vector<int> ys(res.consumed.size());
      for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = (*y)[res.consumed[i]];
      const ClusterScores sc = score_all(ys, lab);
      row.acc = sc.acc;
      row.nmi = sc.nmi;
      row.ari = sc.ari;
    }
    if (res.trace.rows.empty()) res.first_S = row.s;
    res.final_S = row.s;
    res.trace.rows.push_back(row);
    ++st.step;
  }
  if (!have_P) throw DataError("stream_train: stream contained no samples");
  res.labels = hard_assign_batch(Z, st.P);
  return res;
}

StreamResult stream_train(const Matrix& Z, const std::vector<std::size_t>& order, const std::vector<int>* y,
                          const StreamConfig& cfg) {
  if (cfg.B < 1) throw ConfigError("stream_train: B must be >= 1");
  return stream_train_batches(Z, make_batches(order, cfg.B), y, cfg);
}

}  // namespace ddcl
