#include "ddcl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ddcl/kernels.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/rng.hpp"

namespace ddcl {

namespace {

// Centroids stored k x d internally for contiguous rows.
struct Lloyd {
  Matrix C;
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

double assign(const Matrix& Z, const Matrix& C, std::vector<int>& labels, Vec& mind) {
  const auto& K = kernels::active();
  double inertia = 0.0;
  for (std::size_t i = 0; i < Z.rows; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < C.rows; ++j) {
      const double d = K.sqdist(Z.row_ptr(i), C.row_ptr(j), Z.cols);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    labels[i] = best;
    mind[i] = bd;
    inertia += bd;
  }
  return inertia;
}

Matrix kmeanspp(const Matrix& Z, std::size_t k, Rng& rng) {
  const std::size_t n = Z.rows, d = Z.cols;
  Matrix C(k, d);
  const std::size_t first = rng.below(n);
  std::copy(Z.row_ptr(first), Z.row_ptr(first) + d, C.row_ptr(0));
  Vec best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = kernels::sqdist(Z.row_ptr(i), C.row_ptr(0), d);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : best) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= best[pick];
        if (r < 0.0) break;
      }
    }
    std::copy(Z.row_ptr(pick), Z.row_ptr(pick) + d, C.row_ptr(c));
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], kernels::sqdist(Z.row_ptr(i), C.row_ptr(c), d));
  }
  return C;
}

Lloyd lloyd(const Matrix& Z, Matrix C, int max_iter, double tol) {
  const std::size_t n = Z.rows, d = Z.cols, k = C.rows;
  Lloyd r;
  r.labels.assign(n, -1);
  Vec mind(n);
  std::vector<int> prev;
  for (int it = 0; it < max_iter; ++it) {
    r.inertia = assign(Z, C, r.labels, mind);
    r.history.push_back(r.inertia);
    r.iterations = it + 1;
    if (r.labels == prev) break;
    prev = r.labels;
    Matrix next(k, d);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      kernels::axpy(1.0, Z.row_ptr(i), next.row_ptr(r.labels[i]), d);
      ++cnt[r.labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (cnt[j] == 0) {
        // farthest point from its own centroid
        std::size_t far = static_cast<std::size_t>(std::max_element(mind.begin(), mind.end()) - mind.begin());
        std::copy(Z.row_ptr(far), Z.row_ptr(far) + d, next.row_ptr(j));
        mind[far] = 0.0;
      } else {
        for (std::size_t c = 0; c < d; ++c) next(j, c) /= static_cast<double>(cnt[j]);
      }
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) shift += kernels::sqdist(next.row_ptr(j), C.row_ptr(j), d);
    C = std::move(next);
    if (shift <= tol) {
      r.inertia = assign(Z, C, r.labels, mind);
      r.history.push_back(r.inertia);
      break;
    }
  }
  r.C = std::move(C);
  return r;
}

}  // namespace

KmeansResult kmeans(const Matrix& Z, std::size_t k, int n_init, int max_iter, std::uint64_t seed, double tol) {
  if (k == 0 || Z.rows < k) throw std::invalid_argument("kmeans: need n >= k >= 1 (n=" + std::to_string(Z.rows) + ", k=" + std::to_string(k) + ")");
  if (n_init < 1) throw std::invalid_argument("kmeans: n_init must be >= 1");
  Rng rng(seed);
  Lloyd best;
  bool have = false;
  for (int r = 0; r < n_init; ++r) {
    Lloyd cur = lloyd(Z, kmeanspp(Z, k, rng), max_iter, tol);
    if (!have || cur.inertia < best.inertia) {
      best = std::move(cur);
      have = true;
    }
  }
  KmeansResult out;
  out.centroids = transpose(best.C);
  out.labels = std::move(best.labels);
  out.inertia = best.inertia;
  out.iterations = best.iterations;
  out.n_init = n_init;
  out.inertia_history = std::move(best.history);
  return out;
}

KmeansResult minibatch_kmeans(const Matrix& Z, const std::vector<std::size_t>& order, std::size_t k, std::size_t B,
                              std::uint64_t seed) {
  if (B < 1) throw std::invalid_argument("minibatch_kmeans: B must be >= 1");
  if (order.size() < k) throw std::invalid_argument("minibatch_kmeans: stream shorter than k");
  const std::size_t d = Z.cols;
  Rng rng(seed);
  const std::size_t pool = std::max(std::min(B, order.size()), k);
  const auto pick = rng.sample_without_replacement(pool, k);
  Matrix C(k, d);
  for (std::size_t j = 0; j < k; ++j) std::copy(Z.row_ptr(order[pick[j]]), Z.row_ptr(order[pick[j]]) + d, C.row_ptr(j));
  std::vector<double> cnt(k, 0.0);
  std::vector<int> lab;
  for (std::size_t start = 0; start < order.size(); start += B) {
    const std::size_t end = std::min(order.size(), start + B);
    lab.assign(end - start, 0);
    for (std::size_t t = start; t < end; ++t) {
      const double* z = Z.row_ptr(order[t]);
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double dd = kernels::sqdist(z, C.row_ptr(j), d);
        if (dd < bd) {
          bd = dd;
          lab[t - start] = static_cast<int>(j);
        }
      }
    }
    for (std::size_t t = start; t < end; ++t) {
      const int j = lab[t - start];
      cnt[j] += 1.0;
      const double eta = 1.0 / cnt[j];
      double* c = C.row_ptr(j);
      const double* z = Z.row_ptr(order[t]);
      for (std::size_t a = 0; a < d; ++a) c[a] += eta * (z[a] - c[a]);
    }
  }
  KmeansResult out;
  out.labels.assign(Z.rows, 0);
  Vec mind(Z.rows);
  out.inertia = assign(Z, C, out.labels, mind);
  out.centroids = transpose(C);
  out.iterations = static_cast<int>((order.size() + B - 1) / B);
  out.n_init = 1;
  return out;
}

Matrix pca_standardize(const Matrix& Z, const PcaOptions& opt, PcaRecord* record) {
  const std::size_t n = Z.rows, d = Z.cols, m = opt.n_components;
  if (m == 0 || m > std::min(n, d))
    throw std::invalid_argument("pca_standardize: n_components=" + std::to_string(m) + " exceeds min(n, d)=" +
                                std::to_string(std::min(n, d)));
  const Vec mu = col_means(Z);
  Matrix Zc = Z;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) Zc(i, j) -= mu[j];
  const double invn = 1.0 / static_cast<double>(n);

  Matrix comps(d, m);
  Vec var(m);
  double total_var = 0.0;
  if (d <= n) {
    Matrix cov = matmul_tn(Zc, Zc);
    for (double& v : cov.data) v *= invn;
    const SymEig e = sym_eig(cov);
    for (double v : e.values) total_var += std::max(v, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      var[c] = std::max(e.values[c], 0.0);
      for (std::size_t r = 0; r < d; ++r) comps(r, c) = e.vectors(r, c);
    }
  } else {
    // Gram trick: eigenvectors u of Zc Zc^T / n map to Zc^T u / sqrt(n lambda)
    Matrix G = matmul_nt(Zc, Zc);
    for (double& v : G.data) v *= invn;
    const SymEig e = sym_eig(G);
    for (double v : e.values) total_var += std::max(v, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      var[c] = std::max(e.values[c], 0.0);
      const Vec u = e.vectors.col(c);
      Vec v = matvec_t(Zc, u);
      const double nv = std::sqrt(kernels::sqnorm(v.data(), d));
      for (std::size_t r = 0; r < d; ++r) comps(r, c) = nv > 0.0 ? v[r] / nv : 0.0;
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(comps(r, c)) > std::abs(comps(arg, c))) arg = r;
    if (comps(arg, c) < 0.0)
      for (std::size_t r = 0; r < d; ++r) comps(r, c) = -comps(r, c);
  }
  Matrix out = matmul(Zc, comps);
  if (opt.whiten)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < m; ++c) out(i, c) /= std::sqrt(std::max(var[c], 1e-12));
  if (opt.standardize) out = standardize(out);
  if (opt.l2_normalize)
    for (std::size_t i = 0; i < n; ++i) {
      const double nr = std::sqrt(kernels::sqnorm(out.row_ptr(i), m));
      if (nr > 0.0)
        for (std::size_t c = 0; c < m; ++c) out(i, c) /= nr;
    }
  if (record) {
    record->mean = mu;
    record->components = comps;
    record->explained_variance = var;
    record->explained_ratio.resize(m);
    for (std::size_t c = 0; c < m; ++c) record->explained_ratio[c] = total_var > 0.0 ? var[c] / total_var : 0.0;
  }
  return out;
}

std::vector<int> deepcluster_pseudo_labels(const Matrix& F, const DeepClusterConfig& cfg, std::uint64_t seed, double* inertia) {
  PcaOptions po;
  po.n_components = std::min({cfg.pca_dim, F.rows - 1, F.cols});
  po.whiten = true;
  po.l2_normalize = true;
  const Matrix G = pca_standardize(F, po);
  KmeansResult km = kmeans(G, cfg.k, cfg.n_init, 300, seed);
  if (inertia) *inertia = km.inertia;
  return km.labels;
}

namespace {

struct LinearHead {
  Matrix W;  // in x k
  Vec b;
};

LinearHead init_head(std::size_t in, std::size_t k, Rng& rng) {
  LinearHead h{Matrix(in, k), Vec(k, 0.0)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : h.W.data) w = rng.uniform(-bound, bound);
  for (double& v : h.b) v = rng.uniform(-bound, bound);
  return h;
}

Vec class_weights(const std::vector<int>& lab, std::size_t k) {
  std::vector<double> cnt(k, 0.0);
  for (int l : lab) cnt[l] += 1.0;
  Vec w(k);
  for (std::size_t c = 0; c < k; ++c) w[c] = static_cast<double>(lab.size()) / (static_cast<double>(k) * std::max(cnt[c], 1.0));
  return w;
}

// Weighted mean cross-entropy over the batch; writes dL/dlogits.
double weighted_ce(const Matrix& logits, const std::vector<int>& lab, const std::vector<std::size_t>& idx, const Vec& w,
                   Matrix& dlogits) {
  const std::size_t n = logits.rows, k = logits.cols;
  dlogits = Matrix(n, k);
  double wsum = 0.0, loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) wsum += w[lab[idx[i]]];
  for (std::size_t i = 0; i < n; ++i) {
    const double* l = logits.row_ptr(i);
    const double m = *std::max_element(l, l + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(l[j] - m);
    const int y = lab[idx[i]];
    const double wi = w[y] / wsum;
    loss -= wi * (l[y] - m - std::log(z));
    for (std::size_t j = 0; j < k; ++j) dlogits(i, j) = wi * (std::exp(l[j] - m) / z - (static_cast<int>(j) == y ? 1.0 : 0.0));
  }
  return loss;
}

Matrix head_forward(const LinearHead& h, const Matrix& F) {
  Matrix out = matmul(F, h.W);
  for (std::size_t i = 0; i < out.rows; ++i) kernels::axpy(1.0, h.b.data(), out.row_ptr(i), out.cols);
  return out;
}

void head_step(LinearHead& h, const Matrix& F, const Matrix& dl, double lr) {
  const Matrix dW = matmul_tn(F, dl);
  axpy(-lr, dW, h.W);
  for (std::size_t i = 0; i < dl.rows; ++i) kernels::axpy(-lr, dl.row_ptr(i), h.b.data(), dl.cols);
}

Matrix gather_rows(const Matrix& X, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), X.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(X.row_ptr(idx[i]), X.row_ptr(idx[i]) + X.cols, out.row_ptr(i));
  return out;
}

void score_round(DeepClusterRound& r, const std::vector<int>* y, const std::vector<int>& lab) {
  if (!y || y->empty()) return;
  const ClusterScores s = score_all(*y, lab);
  r.acc = s.acc;
  r.nmi = s.nmi;
  r.ari = s.ari;
}

}  // namespace

DeepClusterResult deepcluster_lite(const Matrix& Z, const std::vector<int>* y, const DeepClusterConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("deepcluster_lite: rounds must be >= 1");
  Rng rng(cfg.seed);
  DeepClusterResult res;
  for (int round = 0; round < cfg.rounds; ++round) {
    DeepClusterRound row;
    row.round = round;
    res.labels = deepcluster_pseudo_labels(Z, cfg, rng.next_u64(), &row.inertia);
    LinearHead head = init_head(Z.cols, cfg.k, rng);
    const Vec w = class_weights(res.labels, cfg.k);
    for (int ep = 0; ep < cfg.head_epochs; ++ep) {
      const auto perm = rng.permutation(Z.rows);
      for (std::size_t s = 0; s < perm.size(); s += cfg.batch) {
        std::vector<std::size_t> idx(perm.begin() + s, perm.begin() + std::min(perm.size(), s + cfg.batch));
        const Matrix F = gather_rows(Z, idx);
        Matrix dl;
        row.ce = weighted_ce(head_forward(head, F), res.labels, idx, w, dl);
        head_step(head, F, dl, cfg.lr);
      }
    }
    score_round(row, y, res.labels);
    res.trace.push_back(row);
  }
  return res;
}

DeepClusterResult deepcluster_lite_e2e(const Matrix& X, MlpParams& backbone, const std::vector<int>* y,
                                       const DeepClusterConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("deepcluster_lite_e2e: rounds must be >= 1");
  Rng rng(cfg.seed);
  SgdState sgd;
  sgd.lr = cfg.lr;
  DeepClusterResult res;
  for (int round = 0; round < cfg.rounds; ++round) {
    DeepClusterRound row;
    row.round = round;
    const Matrix F = mlp_forward_const(backbone, X, Mode::Eval);
    check_finite(F, "deepcluster_lite_e2e features");
    res.labels = deepcluster_pseudo_labels(F, cfg, rng.next_u64(), &row.inertia);
    LinearHead head = init_head(F.cols, cfg.k, rng);
    const Vec w = class_weights(res.labels, cfg.k);
    for (int ep = 0; ep < cfg.head_epochs; ++ep) {
      const auto perm = rng.permutation(X.rows);
      // drop the ragged tail so batch statistics stay well defined
      for (std::size_t s = 0; s + cfg.batch <= perm.size(); s += cfg.batch) {
        std::vector<std::size_t> idx(perm.begin() + s, perm.begin() + s + cfg.batch);
        const Matrix xb = gather_rows(X, idx);
        ForwardCache cache;
        const Matrix fb = mlp_forward(backbone, xb, Mode::Train, &cache);
        Matrix dl;
        row.ce = weighted_ce(head_forward(head, fb), res.labels, idx, w, dl);
        const Matrix dF = matmul_nt(dl, head.W);
        head_step(head, fb, dl, cfg.lr);
        sgd_step(backbone, mlp_backward(backbone, cache, dF), sgd);
      }
    }
    score_round(row, y, res.labels);
    res.trace.push_back(row);
  }
  return res;
}

}  // namespace ddcl
