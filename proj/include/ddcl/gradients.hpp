#pragma once

#include <functional>
#include <span>

#include "ddcl/losses.hpp"
#include "ddcl/matrix.hpp"

namespace ddcl {

enum class LossKind { Lq, LOLS, V, Lsep, Quad };

const char* loss_kind_name(LossKind kind);

// Per-sample gradients with respect to q (assignment held as a free variable).
//   Lq   -> d (distance vector)
//   LOLS -> 2 P^T (P q - z)
//   V    -> (|p_j|^2)_j - 2 P^T P q
Vec grad_q(LossKind kind, std::span<const double> z, const Matrix& P, std::span<const double> q);

// Per-sample gradients with respect to P (d x k), q held constant.
//   Lq   -> 2 (P - z 1^T) diag(q)
//   LOLS -> 2 (P q - z) q^T
//   V    -> 2 P Sigma_q
//   Lsep -> gradient of -sum_{i<j} |p_i - p_j|^2 (unweighted)
//   Quad -> lambda P
Matrix grad_P(LossKind kind, std::span<const double> z, const Matrix& P, std::span<const double> q, double lambda = 1.0);

// Gradient of the per-sample loss with respect to z, with q = soft_assign(z, P, T).
// stop_gradient treats q as a constant: both kinds give 2 (z - P q).
Vec grad_z(LossKind kind, std::span<const double> z, const Matrix& P, double T, bool stop_gradient);

// Full-chain gradient of the per-sample V with respect to z.
Vec grad_z_variance(std::span<const double> z, const Matrix& P, double T);

// Back-propagates g = dL/dq through q = softmax(-d / T): returns dL/dd.
Vec softmax_backward(std::span<const double> q, std::span<const double> g, double T);

struct GradReport {
  Matrix analytic;
  Matrix numeric;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

// Central differences of f at `point`, compared with `analytic`.
// max_rel_err = max_abs_err / max(max|analytic|, max|numeric|, 1e-10).
GradReport finite_diff_check(const std::function<double(const Matrix&)>& f, const Matrix& point, const Matrix& analytic,
                             double h = 1e-5);

enum class MainLoss { Lq, LOLS };

struct ObjectiveSpec {
  MainLoss main = MainLoss::Lq;
  LossWeights weights;
  double T = 1.0;
  // Treat q as a constant for the main loss term. The balance and entropy
  // terms depend on P and Z only through q, so they always back-propagate
  // through the softmax.
  bool stop_gradient = true;
  bool need_dZ = false;
};

struct ObjectiveGrad {
  Matrix D;   // n x k distances
  Matrix Q;   // n x k assignments
  Matrix dP;  // d x k
  Matrix dZ;  // n x d, empty unless requested
  double value = 0.0;  // total objective (batch mean)
};

// Mean-over-batch objective main + beta L_bal + sign gamma L_ent + eta L_sep
// + (lambda / 2)|P|^2 and its gradients, with q recomputed from (Z, P, T).
ObjectiveGrad objective_grad(const Matrix& Z, const Matrix& P, const ObjectiveSpec& spec);
double objective_value(const Matrix& Z, const Matrix& P, const ObjectiveSpec& spec);

}  // namespace ddcl
