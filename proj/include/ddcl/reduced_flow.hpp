#pragma once

#include <string>

#include "ddcl/losses.hpp"
#include "ddcl/matrix.hpp"

namespace ddcl {

struct FlowState {
  Matrix P;  // d x k
  Matrix Q;  // n x k
};

struct EnergyGrad {
  Matrix dP;  // d x k
  Matrix dQ;  // n x k
};

// Gradients of energy(Z, P, Q, w) in P and in each q_n. Throws NumericalError
// naming the offending term when a gradient is not finite.
EnergyGrad energy_grad(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w);

// P' = P - step_P dE/dP; q_n' = project(q_n - step_q dE/dq_n).
FlowState flow_step(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w, double step_P,
                    double step_q);

// |dE/dP|_F + sum_n |project(q_n - h dE/dq_n) - q_n| / h
double kkt_residual(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w, double probe_step = 1e-5);

struct FlowOptions {
  int steps = 2000;
  double step_P = 1e-2;
  double step_q = 1e-1;
  bool backtracking = true;  // halve on any energy increase, regrow by `grow` after acceptance
  double grow = 1.25;
  int max_halvings = 60;
  double P_cap = 1e8;
  double probe_step = 1e-5;
};

struct FlowCertificate {
  Vec energy;               // E after each accepted step, energy[0] = initial
  double max_increase = 0;  // largest E_{t+1} - E_t over the series (<= 0 when monotone)
  double final_kkt = 0;
  double initial_kkt = 0;
  double max_P_norm = 0;
  bool bounded = true;
  bool coercive = true;
  std::string warning;
  int steps = 0;
  int rejected = 0;   // halvings
  int stalled = 0;    // steps where no decrease was found within max_halvings
};

FlowCertificate run_flow(const Matrix& Z, const FlowState& init, const LossWeights& w, const FlowOptions& opt,
                         FlowState* final_state = nullptr);

std::string to_json(const FlowCertificate& c);

}  // namespace ddcl
