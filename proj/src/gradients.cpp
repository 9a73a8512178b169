#include "ddcl/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddcl/assignment.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/simplex.hpp"

namespace ddcl {

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Lq: return "Lq";
    case LossKind::LOLS: return "LOLS";
    case LossKind::V: return "V";
    case LossKind::Lsep: return "Lsep";
    case LossKind::Quad: return "quad";
  }
  return "?";
}

namespace {

void check_sample(std::span<const double> z, const Matrix& P) {
  if (z.size() != P.rows) throw std::invalid_argument("gradient: z length does not match P rows");
}

Vec dists(std::span<const double> z, const Matrix& P) {
  Vec d(P.cols, 0.0);
  for (std::size_t j = 0; j < P.cols; ++j)
    for (std::size_t i = 0; i < P.rows; ++i) {
      const double t = z[i] - P(i, j);
      d[j] += t * t;
    }
  return d;
}

// -2 sum_{i != j}(p_j - p_i) = -2 (k p_j - sum_i p_i)
void add_sep_grad(const Matrix& P, double weight, Matrix& G) {
  const std::size_t d = P.rows, k = P.cols;
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += P(r, j);
    for (std::size_t j = 0; j < k; ++j) G(r, j) += weight * (-2.0) * (static_cast<double>(k) * P(r, j) - s);
  }
}

}  // namespace

Vec grad_q(LossKind kind, std::span<const double> z, const Matrix& P, std::span<const double> q) {
  check_sample(z, P);
  if (q.size() != P.cols) throw std::invalid_argument("grad_q: q length does not match k");
  switch (kind) {
    case LossKind::Lq: return dists(z, P);
    case LossKind::LOLS: {
      Vec r = matvec(P, q);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= z[i];
      Vec g = matvec_t(P, r);
      for (double& v : g) v *= 2.0;
      return g;
    }
    case LossKind::V: {
      const Vec pq = matvec(P, q);
      Vec g = matvec_t(P, pq);
      for (std::size_t j = 0; j < P.cols; ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < P.rows; ++i) nrm += P(i, j) * P(i, j);
        g[j] = nrm - 2.0 * g[j];
      }
      return g;
    }
    default: break;
  }
  throw std::invalid_argument(std::string("grad_q: unsupported loss kind ") + loss_kind_name(kind));
}

Matrix grad_P(LossKind kind, std::span<const double> z, const Matrix& P, std::span<const double> q, double lambda) {
  const std::size_t d = P.rows, k = P.cols;
  Matrix G(d, k);
  switch (kind) {
    case LossKind::Lq:
      check_sample(z, P);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < k; ++j) G(r, j) = 2.0 * (P(r, j) - z[r]) * q[j];
      return G;
    case LossKind::LOLS: {
      check_sample(z, P);
      const Vec pq = matvec(P, q);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < k; ++j) G(r, j) = 2.0 * (pq[r] - z[r]) * q[j];
      return G;
    }
    case LossKind::V: {
      const Matrix S = sigma(q);
      G = matmul(P, S);
      for (double& v : G.data) v *= 2.0;
      return G;
    }
    case LossKind::Lsep:
      add_sep_grad(P, 1.0, G);
      return G;
    case LossKind::Quad: return scale(P, lambda);
  }
  throw std::invalid_argument("grad_P: unknown loss kind");
}

Vec softmax_backward(std::span<const double> q, std::span<const double> g, double T) {
  const double qg = kernels::dot(q.data(), g.data(), q.size());
  Vec out(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) out[j] = -(q[j] * g[j] - q[j] * qg) / T;
  return out;
}

Vec grad_z(LossKind kind, std::span<const double> z, const Matrix& P, double T, bool stop_gradient) {
  check_sample(z, P);
  if (kind != LossKind::Lq && kind != LossKind::LOLS) throw std::invalid_argument("grad_z: only Lq and LOLS are supported");
  const Vec q = soft_assign(z, P, T);
  const Vec pq = matvec(P, q);
  Vec g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) g[i] = 2.0 * (z[i] - pq[i]);
  if (stop_gradient) return g;
  // chain through q: dL/dd = explicit + softmax_backward(dL/dq)
  Vec gd;
  if (kind == LossKind::Lq) {
    gd = softmax_backward(q, dists(z, P), T);
    // explicit q_j term is already in g (sum_j q_j 2(z - p_j) = 2(z - Pq))
  } else {
    gd = softmax_backward(q, grad_q(LossKind::LOLS, z, P, q), T);
  }
  for (std::size_t j = 0; j < P.cols; ++j)
    for (std::size_t i = 0; i < z.size(); ++i) g[i] += gd[j] * 2.0 * (z[i] - P(i, j));
  return g;
}

Vec grad_z_variance(std::span<const double> z, const Matrix& P, double T) {
  check_sample(z, P);
  const Vec q = soft_assign(z, P, T);
  const Vec gd = softmax_backward(q, grad_q(LossKind::V, z, P, q), T);
  Vec g(z.size(), 0.0);
  for (std::size_t j = 0; j < P.cols; ++j)
    for (std::size_t i = 0; i < z.size(); ++i) g[i] += gd[j] * 2.0 * (z[i] - P(i, j));
  return g;
}

GradReport finite_diff_check(const std::function<double(const Matrix&)>& f, const Matrix& point, const Matrix& analytic,
                             double h) {
  if (!(h >= 1e-8 && h <= 1e-2)) throw std::invalid_argument("finite_diff_check: h must lie in [1e-8, 1e-2]");
  if (!same_shape(point, analytic)) throw std::invalid_argument("finite_diff_check: analytic gradient shape mismatch");
  GradReport rep;
  rep.analytic = analytic;
  rep.numeric = Matrix(point.rows, point.cols);
  Matrix x = point;
  double amax = 0.0, nmax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x.data[i];
    x.data[i] = x0 + h;
    const double fp = f(x);
    x.data[i] = x0 - h;
    const double fm = f(x);
    x.data[i] = x0;
    const double num = (fp - fm) / (2.0 * h);
    rep.numeric.data[i] = num;
    rep.max_abs_err = std::max(rep.max_abs_err, std::abs(num - analytic.data[i]));
    amax = std::max(amax, std::abs(analytic.data[i]));
    nmax = std::max(nmax, std::abs(num));
  }
  rep.max_rel_err = rep.max_abs_err / std::max({amax, nmax, 1e-10});
  return rep;
}

namespace {

struct Pieces {
  Matrix D, Q;
  double main = 0, bal = 0, ent = 0, sep = 0, quad = 0;
  Vec qbar;
};

Pieces forward(const Matrix& Z, const Matrix& P, const ObjectiveSpec& s) {
  if (Z.rows == 0) throw std::invalid_argument("objective: empty batch");
  Pieces p;
  p.D = pairwise_sq_dists(Z, P);
  p.Q = soft_assign_from_dists(p.D, s.T);
  p.main = s.main == MainLoss::Lq ? quantization_loss(Z, P, p.Q) : ols_loss(Z, P, p.Q);
  const Regularizers r = regularizers(P, p.Q);
  p.bal = r.l_bal;
  p.ent = r.l_ent;
  p.sep = r.l_sep;
  p.quad = 0.5 * s.weights.lambda * frobenius_sq(P);
  p.qbar = col_means(p.Q);
  return p;
}

double combine(const Pieces& p, const LossWeights& w) {
  return p.main + w.beta * p.bal + w.entropy_sign * w.gamma * p.ent + w.eta * p.sep + p.quad;
}

}  // namespace

double objective_value(const Matrix& Z, const Matrix& P, const ObjectiveSpec& spec) {
  return combine(forward(Z, P, spec), spec.weights);
}

ObjectiveGrad objective_grad(const Matrix& Z, const Matrix& P, const ObjectiveSpec& spec) {
  validate(spec.weights);
  Pieces pc = forward(Z, P, spec);
  const std::size_t n = Z.rows, d = Z.cols, k = P.cols;
  const double invN = 1.0 / static_cast<double>(n);
  const LossWeights& w = spec.weights;

  ObjectiveGrad out;
  out.value = combine(pc, w);
  out.dP = Matrix(d, k);
  if (spec.need_dZ) out.dZ = Matrix(n, d);

  const Matrix Pt = transpose(P);
  Matrix PQ;  // n x d, rows P q_n
  if (spec.main == MainLoss::LOLS) PQ = matmul(pc.Q, Pt);

  Vec bal_g(k, 0.0);
  if (w.beta > 0.0)
    for (std::size_t j = 0; j < k; ++j)
      bal_g[j] = w.beta * (std::log(std::max(pc.qbar[j] * static_cast<double>(k), kLogClamp)) + 1.0) * invN;

  Vec gq(k), gd(k), r(d);
  Matrix dPt(k, d);  // accumulate transposed for contiguous rows
  for (std::size_t i = 0; i < n; ++i) {
    const double* q = pc.Q.row_ptr(i);
    const double* z = Z.row_ptr(i);
    const double* dist = pc.D.row_ptr(i);
    std::fill(gq.begin(), gq.end(), 0.0);
    std::fill(gd.begin(), gd.end(), 0.0);

    if (spec.main == MainLoss::Lq) {
      for (std::size_t j = 0; j < k; ++j) gd[j] = q[j] * invN;
      if (!spec.stop_gradient)
        for (std::size_t j = 0; j < k; ++j) gq[j] += dist[j] * invN;
    } else {
      const double* pq = PQ.row_ptr(i);
      for (std::size_t c = 0; c < d; ++c) r[c] = pq[c] - z[c];
      // explicit P and z terms of |z - P q|^2
      for (std::size_t j = 0; j < k; ++j) kernels::axpy(2.0 * q[j] * invN, r.data(), dPt.row_ptr(j), d);
      if (spec.need_dZ) kernels::axpy(-2.0 * invN, r.data(), out.dZ.row_ptr(i), d);
      if (!spec.stop_gradient)
        for (std::size_t j = 0; j < k; ++j) gq[j] += 2.0 * kernels::dot(Pt.row_ptr(j), r.data(), d) * invN;
    }
    if (w.beta > 0.0)
      for (std::size_t j = 0; j < k; ++j) gq[j] += bal_g[j];
    if (w.gamma > 0.0)
      for (std::size_t j = 0; j < k; ++j)
        gq[j] += w.entropy_sign * w.gamma * (-(std::log(std::max(q[j], kLogClamp)) + 1.0)) * invN;

    const Vec back = softmax_backward(std::span<const double>(q, k), gq, spec.T);
    for (std::size_t j = 0; j < k; ++j) gd[j] += back[j];

    // d_j = |z - p_j|^2: dd/dp_j = -2 (z - p_j), dd/dz = 2 (z - p_j)
    for (std::size_t j = 0; j < k; ++j) {
      if (gd[j] == 0.0) continue;
      const double* p = Pt.row_ptr(j);
      double* gp = dPt.row_ptr(j);
      for (std::size_t c = 0; c < d; ++c) gp[c] -= 2.0 * gd[j] * (z[c] - p[c]);
      if (spec.need_dZ) {
        double* gz = out.dZ.row_ptr(i);
        for (std::size_t c = 0; c < d; ++c) gz[c] += 2.0 * gd[j] * (z[c] - p[c]);
      }
    }
  }
  out.dP = transpose(dPt);
  if (w.eta > 0.0) add_sep_grad(P, w.eta, out.dP);
  if (w.lambda > 0.0) axpy(w.lambda, P, out.dP);
  out.D = std::move(pc.D);
  out.Q = std::move(pc.Q);
  return out;
}

}  // namespace ddcl
