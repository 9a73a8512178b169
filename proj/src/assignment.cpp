#include "ddcl/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"

namespace ddcl {

namespace {

void softmax_neg_inplace(double* d, std::size_t k, double T) {
  const double dmin = *std::min_element(d, d + k);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    d[j] = std::exp(-(d[j] - dmin) / T);
    s += d[j];
  }
  for (std::size_t j = 0; j < k; ++j) d[j] /= s;
}

void check_T(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("soft_assign: temperature must be positive, got " + std::to_string(T));
}

}  // namespace

Vec soft_assign(std::span<const double> z, const Matrix& P, double T) {
  check_T(T);
  if (z.size() != P.rows) throw std::invalid_argument("soft_assign: z has length " + std::to_string(z.size()) + ", P has " + std::to_string(P.rows) + " rows");
  Vec q(P.cols);
  for (std::size_t j = 0; j < P.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < P.rows; ++i) {
      const double diff = z[i] - P(i, j);
      s += diff * diff;
    }
    q[j] = s;
  }
  softmax_neg_inplace(q.data(), q.size(), T);
  return q;
}

Matrix soft_assign_from_dists(const Matrix& D, double T) {
  check_T(T);
  Matrix Q = D;
  for (std::size_t i = 0; i < Q.rows; ++i) softmax_neg_inplace(Q.row_ptr(i), Q.cols, T);
  return Q;
}

Matrix soft_assign_batch(const Matrix& Z, const Matrix& P, double T) {
  return soft_assign_from_dists(pairwise_sq_dists(Z, P), T);
}

std::size_t hard_assign(std::span<const double> z, const Matrix& P) {
  if (z.size() != P.rows) throw std::invalid_argument("hard_assign: dimension mismatch");
  std::size_t best = 0;
  double bd = 0.0;
  for (std::size_t j = 0; j < P.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < P.rows; ++i) {
      const double diff = z[i] - P(i, j);
      s += diff * diff;
    }
    if (j == 0 || s < bd) {
      bd = s;
      best = j;
    }
  }
  return best;
}

std::vector<int> hard_assign_batch(const Matrix& Z, const Matrix& P) {
  const Matrix D = pairwise_sq_dists(Z, P);
  std::vector<int> lab(Z.rows);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const double* r = D.row_ptr(i);
    lab[i] = static_cast<int>(std::min_element(r, r + D.cols) - r);
  }
  return lab;
}

std::vector<int> argmax_rows(const Matrix& Q) {
  std::vector<int> lab(Q.rows);
  for (std::size_t i = 0; i < Q.rows; ++i) {
    const double* r = Q.row_ptr(i);
    lab[i] = static_cast<int>(std::max_element(r, r + Q.cols) - r);
  }
  return lab;
}

Matrix sigma(std::span<const double> q) {
  const std::size_t k = q.size();
  Matrix S(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) S(i, j) = (i == j ? q[i] : 0.0) - q[i] * q[j];
  return S;
}

double concentration(std::span<const double> q) { return kernels::sqnorm(q.data(), q.size()); }

double separation_force_trace(std::span<const double> q) { return 1.0 - concentration(q); }

}  // namespace ddcl
