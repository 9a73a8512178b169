#include "ddcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/simplex.hpp"

namespace ddcl {

void validate(const LossWeights& w) {
  if (w.beta < 0 || w.gamma < 0 || w.eta < 0 || w.lambda < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (w.entropy_sign != 1 && w.entropy_sign != -1) throw std::invalid_argument("entropy_sign must be +1 or -1");
}

namespace {

void check_batch(const Matrix& Z, const Matrix& P, const Matrix& Q, const char* who) {
  if (Z.rows == 0) throw std::invalid_argument(std::string(who) + ": empty batch");
  if (Z.cols != P.rows) throw std::invalid_argument(std::string(who) + ": Z and P disagree on d");
  if (Q.rows != Z.rows || Q.cols != P.cols) throw std::invalid_argument(std::string(who) + ": Q must be n x k");
}

// sum over samples of sum_j q_nj |z_n - p_j|^2
double quantization_sum(const Matrix& Z, const Matrix& P, const Matrix& Q) {
  const Matrix D = pairwise_sq_dists(Z, P);
  double s = 0.0;
  for (std::size_t i = 0; i < Q.rows; ++i) s += kernels::dot(Q.row_ptr(i), D.row_ptr(i), Q.cols);
  return s;
}

}  // namespace

double quantization_loss(const Matrix& Z, const Matrix& P, const Matrix& Q) {
  check_batch(Z, P, Q, "quantization_loss");
  return quantization_sum(Z, P, Q) / static_cast<double>(Z.rows);
}

double ols_loss(const Matrix& Z, const Matrix& P, const Matrix& Q) {
  check_batch(Z, P, Q, "ols_loss");
  const Matrix R = matmul_nt(Q, P);  // n x d, row n = P q_n
  double s = 0.0;
  for (std::size_t i = 0; i < Z.rows; ++i) s += kernels::sqdist(Z.row_ptr(i), R.row_ptr(i), Z.cols);
  return s / static_cast<double>(Z.rows);
}

double variance_term(const Matrix& P, const Matrix& Q) {
  if (Q.cols != P.cols) throw std::invalid_argument("variance_term: Q must have k columns");
  if (Q.rows == 0) return 0.0;
  const Matrix Pt = transpose(P);  // k x d
  const Matrix M = matmul(Q, Pt);  // n x d, row n = P q_n
  double s = 0.0;
  for (std::size_t i = 0; i < Q.rows; ++i)
    for (std::size_t j = 0; j < Q.cols; ++j) {
      const double q = Q(i, j);
      if (q != 0.0) s += q * kernels::sqdist(Pt.row_ptr(j), M.row_ptr(i), Pt.cols);
    }
  return s / static_cast<double>(Q.rows);
}

double separation_loss(const Matrix& P) {
  const Matrix Pt = transpose(P);
  double s = 0.0;
  for (std::size_t i = 0; i < Pt.rows; ++i)
    for (std::size_t j = i + 1; j < Pt.rows; ++j) s += kernels::sqdist(Pt.row_ptr(i), Pt.row_ptr(j), Pt.cols);
  return -s;
}

double separation(const Matrix& P) {
  const std::size_t k = P.cols;
  if (k < 2) throw std::invalid_argument("separation: need k >= 2");
  return -separation_loss(P) / (0.5 * static_cast<double>(k * (k - 1)));
}

Regularizers regularizers(const Matrix& P, const Matrix& Q) {
  Regularizers r;
  const std::size_t n = Q.rows, k = Q.cols;
  if (n > 0) {
    Vec qbar(k, 0.0);
    double ent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) qbar[j] += Q(i, j);
      ent += entropy(Q.row(i));
    }
    for (double& v : qbar) v /= static_cast<double>(n);
    r.l_bal = kl_to_uniform(qbar);
    r.l_ent = ent / static_cast<double>(n);
  }
  r.l_sep = separation_loss(P);
  return r;
}

LossBreakdown total_loss(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w) {
  validate(w);
  LossBreakdown b;
  b.l_q = quantization_loss(Z, P, Q);
  b.l_ols = ols_loss(Z, P, Q);
  b.v = variance_term(P, Q);
  const Regularizers r = regularizers(P, Q);
  b.l_bal = r.l_bal;
  b.l_ent = r.l_ent;
  b.l_sep = r.l_sep;
  b.l_quad = 0.5 * w.lambda * frobenius_sq(P);
  b.total = b.l_q + w.beta * b.l_bal + w.entropy_sign * w.gamma * b.l_ent + w.eta * b.l_sep + b.l_quad;
  return b;
}

bool coercive(const LossWeights& w, std::size_t k) {
  const double pairs = 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
  return w.lambda > 0.0 && w.lambda > 2.0 * w.eta * pairs;
}

EnergyValue energy(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w) {
  validate(w);
  check_batch(Z, P, Q, "energy");
  EnergyValue e;
  const Regularizers r = regularizers(P, Q);
  e.value = quantization_sum(Z, P, Q) + w.beta * r.l_bal + w.entropy_sign * w.gamma * r.l_ent + w.eta * r.l_sep +
            0.5 * w.lambda * frobenius_sq(P);
  e.coercive = coercive(w, P.cols);
  if (!e.coercive) e.warning = "coercivity condition lambda > 2*eta*k(k-1)/2 violated";
  return e;
}

double soft_cross_entropy(const Matrix& logits, const Matrix& Qt) {
  if (!same_shape(logits, Qt)) throw std::invalid_argument("soft_cross_entropy: shape mismatch");
  if (logits.rows == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* l = logits.row_ptr(i);
    const double m = *std::max_element(l, l + logits.cols);
    double z = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) z += std::exp(l[j] - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < logits.cols; ++j) {
      const double q = Qt(i, j);
      if (q == 0.0) continue;
      const double logp = std::max(l[j] - lse, std::log(kLogClamp));
      s -= q * logp;
    }
  }
  return s / static_cast<double>(logits.rows);
}

}  // namespace ddcl
