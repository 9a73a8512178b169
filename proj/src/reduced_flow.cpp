#include "ddcl/reduced_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "ddcl/errors.hpp"
#include "ddcl/gradients.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/simplex.hpp"

namespace ddcl {

namespace {

void check_shapes(const Matrix& Z, const Matrix& P, const Matrix& Q) {
  if (P.rows != Z.cols || Q.rows != Z.rows || Q.cols != P.cols)
    throw std::invalid_argument("reduced flow: shapes of Z (" + std::to_string(Z.rows) + "x" + std::to_string(Z.cols) +
                                "), P (" + std::to_string(P.rows) + "x" + std::to_string(P.cols) + ") and Q (" +
                                std::to_string(Q.rows) + "x" + std::to_string(Q.cols) + ") disagree");
}

void require_finite(const Matrix& M, const char* term) {
  for (double v : M.data)
    if (!std::isfinite(v)) throw NumericalError(std::string("reduced flow: non-finite gradient in term ") + term);
}

}  // namespace

EnergyGrad energy_grad(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w) {
  validate(w);
  check_shapes(Z, P, Q);
  const std::size_t n = Z.rows, d = Z.cols, k = P.cols;
  const double invN = 1.0 / static_cast<double>(n);
  EnergyGrad g;
  g.dQ = Matrix(n, k);
  const Matrix Pt = transpose(P);
  Matrix dPt(k, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = Z.row_ptr(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double* p = Pt.row_ptr(j);
      g.dQ(i, j) = kernels::sqdist(z, p, d);
      const double qj = Q(i, j);
      if (qj == 0.0) continue;
      double* gp = dPt.row_ptr(j);
      for (std::size_t c = 0; c < d; ++c) gp[c] += 2.0 * qj * (p[c] - z[c]);
    }
  }
  g.dP = transpose(dPt);
  require_finite(g.dP, "quantization");
  if (w.eta > 0.0) {
    const Matrix gs = grad_P(LossKind::Lsep, {}, P, {});
    axpy(w.eta, gs, g.dP);
    require_finite(g.dP, "separation");
  }
  if (w.lambda > 0.0) axpy(w.lambda, P, g.dP);
  require_finite(g.dP, "quadratic");

  if (w.beta > 0.0) {
    Vec qbar(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) qbar[j] += Q(i, j) * invN;
    for (std::size_t j = 0; j < k; ++j) {
      const double gj = w.beta * (std::log(std::max(qbar[j], kLogClamp)) + 1.0) * invN;
      for (std::size_t i = 0; i < n; ++i) g.dQ(i, j) += gj;
    }
    require_finite(g.dQ, "balance");
  }
  if (w.gamma > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j)
        g.dQ(i, j) += w.entropy_sign * w.gamma * (-(std::log(std::max(Q(i, j), kLogClamp)) + 1.0)) * invN;
    require_finite(g.dQ, "entropy");
  }
  require_finite(g.dQ, "quantization");
  return g;
}

FlowState flow_step(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w, double step_P,
                    double step_q) {
  if (step_P < 0.0 || step_q < 0.0) throw std::invalid_argument("flow_step: step sizes must be non-negative");
  const EnergyGrad g = energy_grad(Z, P, Q, w);
  FlowState s{P, Q};
  axpy(-step_P, g.dP, s.P);
  if (step_q > 0.0) {
    Vec v(Q.cols);
    for (std::size_t i = 0; i < Q.rows; ++i) {
      for (std::size_t j = 0; j < Q.cols; ++j) v[j] = Q(i, j) - step_q * g.dQ(i, j);
      const Vec p = project_simplex(v);
      std::copy(p.begin(), p.end(), s.Q.row_ptr(i));
    }
  }
  return s;
}

double kkt_residual(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w, double probe_step) {
  if (!(probe_step > 0.0)) throw std::invalid_argument("kkt_residual: probe_step must be > 0");
  const EnergyGrad g = energy_grad(Z, P, Q, w);
  double r = frobenius_norm(g.dP);
  Vec v(Q.cols);
  for (std::size_t i = 0; i < Q.rows; ++i) {
    for (std::size_t j = 0; j < Q.cols; ++j) v[j] = Q(i, j) - probe_step * g.dQ(i, j);
    const Vec p = project_simplex(v);
    double s = 0.0;
    for (std::size_t j = 0; j < Q.cols; ++j) s += (p[j] - Q(i, j)) * (p[j] - Q(i, j));
    r += std::sqrt(s) / probe_step;
  }
  return r;
}

FlowCertificate run_flow(const Matrix& Z, const FlowState& init, const LossWeights& w, const FlowOptions& opt,
                         FlowState* final_state) {
  check_shapes(Z, init.P, init.Q);
  if (opt.steps < 0) throw std::invalid_argument("run_flow: steps must be >= 0");
  if (opt.step_P < 0.0 || opt.step_q < 0.0) throw std::invalid_argument("run_flow: step sizes must be non-negative");
  FlowCertificate c;
  FlowState s = init;
  EnergyValue e0 = energy(Z, s.P, s.Q, w);
  c.coercive = e0.coercive;
  c.warning = e0.warning;
  double E = e0.value;
  c.energy.push_back(E);
  c.initial_kkt = kkt_residual(Z, s.P, s.Q, w, opt.probe_step);
  c.max_P_norm = frobenius_norm(s.P);
  c.max_increase = -std::numeric_limits<double>::infinity();
  double hP = opt.step_P, hq = opt.step_q;
  for (int t = 0; t < opt.steps; ++t) {
    FlowState cand = flow_step(Z, s.P, s.Q, w, hP, hq);
    double Ec = energy(Z, cand.P, cand.Q, w).value;
    if (opt.backtracking) {
      int halvings = 0;
      while (!(Ec <= E) && halvings < opt.max_halvings) {
        hP *= 0.5;
        hq *= 0.5;
        ++halvings;
        ++c.rejected;
        cand = flow_step(Z, s.P, s.Q, w, hP, hq);
        Ec = energy(Z, cand.P, cand.Q, w).value;
      }
      if (!(Ec <= E)) {
        ++c.stalled;
        c.energy.push_back(E);
        c.max_increase = std::max(c.max_increase, 0.0);
        ++c.steps;
        continue;
      }
      hP = std::min(hP * opt.grow, opt.step_P);
      hq = std::min(hq * opt.grow, opt.step_q);
    }
    if (!std::isfinite(Ec)) throw NumericalError("run_flow: non-finite energy at step " + std::to_string(t));
    c.max_increase = std::max(c.max_increase, Ec - E);
    s = std::move(cand);
    E = Ec;
    c.energy.push_back(E);
    ++c.steps;
    const double pn = frobenius_norm(s.P);
    c.max_P_norm = std::max(c.max_P_norm, pn);
    if (!std::isfinite(pn) || pn > opt.P_cap) {
      c.bounded = false;
      break;
    }
  }
  if (c.energy.size() == 1) c.max_increase = 0.0;
  c.final_kkt = kkt_residual(Z, s.P, s.Q, w, opt.probe_step);
  if (final_state) *final_state = std::move(s);
  return c;
}

std::string to_json(const FlowCertificate& c) {
  nlohmann::json j;
  j["steps"] = c.steps;
  j["energy_initial"] = c.energy.empty() ? 0.0 : c.energy.front();
  j["energy_final"] = c.energy.empty() ? 0.0 : c.energy.back();
  j["max_energy_increase"] = c.max_increase;
  j["initial_kkt_residual"] = c.initial_kkt;
  j["final_kkt_residual"] = c.final_kkt;
  j["max_P_norm"] = c.max_P_norm;
  j["bounded"] = c.bounded;
  j["coercive"] = c.coercive;
  j["warning"] = c.warning;
  j["rejected_steps"] = c.rejected;
  j["stalled_steps"] = c.stalled;
  return j.dump(2);
}

}  // namespace ddcl
