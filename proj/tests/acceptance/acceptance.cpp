// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)
// Env: DDCL_DIGITS_CSV (digits data), DDCL_ACCEPT_OUT (artifact directory), DDCL_THREADS.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>

#include "oracles.hpp"

#include "ddcl/assignment.hpp"
#include "ddcl/backbone.hpp"
#include "ddcl/experiments.hpp"
#include "ddcl/gradients.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/reduced_flow.hpp"
#include "ddcl/simplex.hpp"

using namespace ddcl;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string out_root() {
  const char* e = std::getenv("DDCL_ACCEPT_OUT");
  return e && *e ? e : "acceptance_out";
}

ExperimentOptions options(const std::string& block) {
  ExperimentOptions o;
  o.out_dir = join_path(out_root(), block);
  return o;
}

bool have_digits() {
  const char* e = std::getenv("DDCL_DIGITS_CSV");
  if (!e || !*e) return false;
  try {
    load_digits(e);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// ---- shared block runs (computed once, used by several criteria)

const ExperimentSummary& block1() {
  static const ExperimentSummary s = run_block1(options("block1"));
  return s;
}

const ExperimentSummary& block2() {
  static const ExperimentSummary s = run_block2(options("block2"));
  return s;
}

// ---- criteria

Verdict decomposition() {
  Rng rng(1);
  int viol = 0, count = 0;
  double worst = 0.0, min_v = 0.0;
  for (std::size_t d : {2, 64, 512})
    for (std::size_t k : {2, 10})
      for (int it = 0; it < 1667; ++it) {
        const std::size_t n = 4;
        const Matrix Z = oracle::random_matrix(n, d, rng), P = oracle::random_matrix(d, k, rng);
        const double T = std::pow(10.0, rng.uniform(-2.0, 2.0)) * static_cast<double>(d);
        const Matrix Q = soft_assign_batch(Z, P, T);
        const double lq = quantization_loss(Z, P, Q), lo = ols_loss(Z, P, Q), v = variance_term(P, Q);
        const double gap = std::abs(lq - lo - v);
        worst = std::max(worst, gap);
        min_v = std::min(min_v, v);
        if (gap > 1e-9 || v < -1e-12) ++viol;
        ++count;
      }
  return {viol == 0, fmt("%.0f instances, %.0f violations, max |Lq-Lols-V| = %.2e, min V = %.2e", count, viol, worst, min_v)};
}

double mlp_value(const MlpParams& p, const Matrix& X, const Matrix& R) {
  const Matrix Y = mlp_forward_const(p, X, Mode::Train);
  double s = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) s += Y.data[i] * R.data[i];
  return s;
}

Verdict gradients() {
  Rng rng(2);
  double strict = 0.0, loose = 0.0;
  auto lq = [](const Vec& z, const Matrix& P, const Vec& q) { return oracle::lq_naive(z, P, q); };
  auto lo = [](const Vec& z, const Matrix& P, const Vec& q) { return oracle::ols_naive(z, P, q); };
  using Fn = std::function<double(const Vec&, const Matrix&, const Vec&)>;
  const std::vector<std::pair<LossKind, Fn>> mains{{LossKind::Lq, lq}, {LossKind::LOLS, lo}};
  for (int it = 0; it < 100; ++it) {
    const std::size_t d = 2 + rng.below(8), k = 2 + rng.below(6);
    const Vec z = oracle::random_matrix(d, 1, rng).data;
    const Matrix P = oracle::random_matrix(d, k, rng);
    const Vec q = oracle::random_simplex(k, rng);
    const double T = 0.3 + 2.0 * rng.uniform();
    const Matrix zc = oracle::col_vector(z), qc = oracle::col_vector(q);
    for (const auto& [kind, f] : mains) {
      strict = std::max(strict, oracle::rel_err(grad_P(kind, z, P, q),
                                                oracle::numeric_grad([&](const Matrix& x) { return f(z, x, q); }, P)));
      strict = std::max(strict, oracle::rel_err(oracle::col_vector(grad_q(kind, z, P, q)),
                                                oracle::numeric_grad([&](const Matrix& x) { return f(z, P, x.data); }, qc)));
      const Vec q0 = oracle::softmax_naive(z, P, T);
      strict = std::max(strict, oracle::rel_err(oracle::col_vector(grad_z(kind, z, P, T, true)),
                                                oracle::numeric_grad([&](const Matrix& x) { return f(x.data, P, q0); }, zc)));
      loose = std::max(loose, oracle::rel_err(oracle::col_vector(grad_z(kind, z, P, T, false)),
                                              oracle::numeric_grad(
                                                  [&](const Matrix& x) {
                                                    return f(x.data, P, oracle::softmax_naive(x.data, P, T));
                                                  },
                                                  zc)));
    }
    auto vf = [&](const Matrix& x) { return oracle::variance_naive(x, q); };
    strict = std::max(strict, oracle::rel_err(grad_P(LossKind::V, z, P, q), oracle::numeric_grad(vf, P)));
    strict = std::max(strict, oracle::rel_err(oracle::col_vector(grad_q(LossKind::V, z, P, q)),
                                              oracle::numeric_grad([&](const Matrix& x) { return oracle::variance_naive(P, x.data); }, qc)));
    auto sep = [&](const Matrix& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
          for (std::size_t r = 0; r < d; ++r) s += (x(r, i) - x(r, j)) * (x(r, i) - x(r, j));
      return -s;
    };
    strict = std::max(strict, oracle::rel_err(grad_P(LossKind::Lsep, z, P, q), oracle::numeric_grad(sep, P)));
    strict = std::max(strict, oracle::rel_err(grad_P(LossKind::Quad, z, P, q, 0.7),
                                              oracle::numeric_grad([&](const Matrix& x) { return 0.35 * frobenius_sq(x); }, P)));
    loose = std::max(loose, oracle::rel_err(oracle::col_vector(grad_z_variance(z, P, T)),
                                            oracle::numeric_grad(
                                                [&](const Matrix& x) {
                                                  return oracle::variance_naive(P, oracle::softmax_naive(x.data, P, T));
                                                },
                                                zc)));
    // full batch objective with every regularizer, through the backbone features
    const Matrix Zb = oracle::random_matrix(5, d, rng);
    ObjectiveSpec spec;
    spec.main = it % 2 ? MainLoss::LOLS : MainLoss::Lq;
    spec.weights = LossWeights{0.3, 0.2, 0.05, 0.1, -1};
    spec.T = T;
    spec.stop_gradient = false;
    spec.need_dZ = true;
    const ObjectiveGrad og = objective_grad(Zb, P, spec);
    loose = std::max(loose, oracle::rel_err(og.dP, oracle::numeric_grad([&](const Matrix& x) { return objective_value(Zb, x, spec); }, P)));
    loose = std::max(loose, oracle::rel_err(og.dZ, oracle::numeric_grad([&](const Matrix& x) { return objective_value(x, P, spec); }, Zb)));
    // MLP backprop with batch norm
    MlpParams mp = mlp_init(MlpSpec{{3, 6, 4}, true, true}, rng);
    for (auto& L : mp.layers)
      for (double& g : L.gamma) g = 0.5 + rng.uniform();
    const Matrix X = oracle::random_matrix(6, 3, rng), R = oracle::random_matrix(6, 4, rng);
    ForwardCache cache;
    mlp_forward_const(mp, X, Mode::Train, &cache);
    const MlpGrads mg = mlp_backward(mp, cache, R);
    loose = std::max(loose, oracle::rel_err(mg.dX, oracle::numeric_grad([&](const Matrix& x) { return mlp_value(mp, x, R); }, X)));
    for (std::size_t l = 0; l < mp.layers.size(); ++l) {
      MlpParams m2 = mp;
      loose = std::max(loose, oracle::rel_err(mg.dW[l], oracle::numeric_grad(
                                                            [&](const Matrix& w) {
                                                              m2.layers[l].W = w;
                                                              return mlp_value(m2, X, R);
                                                            },
                                                            mp.layers[l].W)));
    }
  }
  return {strict <= 1e-5 && loose <= 1e-4,
          fmt("100 instances per configuration; max rel err %.2e (tol 1e-5), full-chain/MLP %.2e (tol 1e-4)", strict, loose)};
}

Verdict stop_gradient() {
  Rng rng(3);
  double same = 0.0, resid = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const std::size_t d = 2 + rng.below(30), k = 2 + rng.below(10);
    const Vec z = oracle::random_matrix(d, 1, rng).data;
    const Matrix P = oracle::random_matrix(d, k, rng);
    const double T = 0.1 + 3.0 * rng.uniform();
    const Vec a = grad_z(LossKind::Lq, z, P, T, true), b = grad_z(LossKind::LOLS, z, P, T, true);
    const Vec fa = grad_z(LossKind::Lq, z, P, T, false), fb = grad_z(LossKind::LOLS, z, P, T, false);
    const Vec gv = grad_z_variance(z, P, T);
    for (std::size_t i = 0; i < d; ++i) {
      same = std::max(same, std::abs(a[i] - b[i]));
      resid = std::max(resid, std::abs(fa[i] - fb[i] - gv[i]));
    }
  }
  return {same <= 1e-12 && resid <= 1e-10,
          fmt("stop-gradient max |dLq - dLols| = %.2e (tol 1e-12); full-gradient residual vs grad V = %.2e (tol 1e-10)", same, resid)};
}

Verdict collapse() {
  // one sample, two prototypes at p* +- eps u, sample offset orthogonal to u
  Rng rng(4);
  double lq_err = 0.0, ols_max = 0.0;
  for (int it = 0; it < 200; ++it) {
    const std::size_t d = 2 + rng.below(6);
    Vec u = oracle::random_matrix(d, 1, rng).data, w = oracle::random_matrix(d, 1, rng).data;
    double nu = 0.0;
    for (double x : u) nu += x * x;
    for (double& x : u) x /= std::sqrt(nu);
    double wu = 0.0;
    for (std::size_t i = 0; i < d; ++i) wu += w[i] * u[i];
    for (std::size_t i = 0; i < d; ++i) w[i] -= wu * u[i];
    const double eps = 1e-3 * (1.0 + rng.uniform());
    const Vec ps = oracle::random_matrix(d, 1, rng).data;
    Matrix P(d, 2);
    Vec z(d);
    for (std::size_t i = 0; i < d; ++i) {
      P(i, 0) = ps[i] + eps * u[i];
      P(i, 1) = ps[i] - eps * u[i];
      z[i] = ps[i] + w[i];
    }
    const Vec q = soft_assign(z, P, 0.5 + rng.uniform());
    auto force = [&](LossKind kind) {
      const Matrix g = grad_P(kind, z, P, q);
      double f = 0.0;
      for (std::size_t i = 0; i < d; ++i) f += (g(i, 0) - g(i, 1)) * u[i];
      return f;
    };
    lq_err = std::max(lq_err, std::abs(force(LossKind::Lq) - 2.0 * eps * (q[0] + q[1])));
    ols_max = std::max(ols_max, std::abs(force(LossKind::LOLS)));
  }
  const ExperimentSummary& b1 = block1();
  const double lq_col = b1.check("collapses_lq_total");
  const double ols_col = b1.check("collapses/moons/T=1/ols") + b1.check("collapses/circles/T=1/ols");
  const bool micro = lq_err <= 1e-8 && ols_max <= 1e-8;
  return {micro && lq_col == 0 && ols_col > 0,
          fmt("micro-instance |F_Lq - 2eps(qi+qj)| = %.2e, |F_Lols| = %.2e; Block 1 collapses: L_q %.0f (need 0), "
              "L_OLS at T=1 on Moons+Circles %.0f (need > 0)",
              lq_err, ols_max, lq_col, ols_col)};
}

Verdict block1_accuracy() {
  const ExperimentSummary& b1 = block1();
  const double moons = b1.method("moons/lq").acc.mean, blobs = b1.method("blobs/T=0.5/lq").acc.mean;
  return {std::abs(moons - 0.847) <= 0.05 && blobs > 0.9,
          fmt("Moons ACC %.3f (target 0.847 +- 0.05), Blobs ACC at T=0.5 %.4f (need > 0.9; all-T mean %.3f)", moons,
              blobs, b1.method("blobs/lq").acc.mean)};
}

Verdict feedback() {
  const double moons = block1().check("corr_sk/moons/lq");
  if (!have_digits())
    return {false, fmt("digits CSV unavailable (set DDCL_DIGITS_CSV); Moons corr(S,K) = %.3f", moons)};
  const double dig = block2().check("corr_sk/ddcl_lq");
  return {dig <= -0.5 && moons <= -0.3,
          fmt("Block 2 corr(S,K) = %.3f (need <= -0.5), Moons corr(S,K) = %.3f (need <= -0.3)", dig, moons)};
}

Verdict v_monotone() {
  Rng rng(7);
  int bad = 0;
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    const std::size_t d = 1 + rng.below(8), k = 2 + rng.below(8);
    const Vec z = oracle::random_matrix(d, 1, rng).data;
    const Matrix P = oracle::random_matrix(d, k, rng);
    double prev = -1.0;
    for (int g = 0; g < 20; ++g) {
      const double T = std::pow(10.0, -2.0 + 4.0 * g / 19.0);
      const Vec q = soft_assign(z, P, T);
      Matrix Q(1, k);
      std::copy(q.begin(), q.end(), Q.row_ptr(0));
      const double v = variance_term(P, Q);
      if (g > 0 && v < prev - 1e-10) {
        ++bad;
        worst = std::max(worst, prev - v);
      }
      prev = v;
    }
  }
  return {bad == 0, fmt("100 (z,P) x 20-point log T grid: %.0f decreases (largest %.2e)", bad, worst)};
}

Verdict lyapunov() {
  FlowOptions opt;
  const FlowRun fr = run_blobs_flow(0, LossWeights{0.0, 0.0, 0.01, 0.5, -1}, opt);
  ensure_dir(out_root());
  write_text(join_path(out_root(), "flow_certificate.json"), to_json(fr.cert) + "\n");
  const FlowCertificate& c = fr.cert;
  return {c.max_increase <= 1e-9 && c.bounded && c.final_kkt < 1e-3,
          fmt("max energy increase %.2e (tol 1e-9), bounded %.0f, final KKT %.2e (need < 1e-3)", c.max_increase,
              c.bounded ? 1.0 : 0.0, c.final_kkt)};
}

Verdict high_dim() {
  const ExperimentSummary s = run_block3(options("block3"));
  bool order = true;
  std::string detail;
  for (int d : {10, 50, 200, 500, 1000, 5000}) {
    const std::string p = "d=" + std::to_string(d) + "/";
    const double a = s.method(p + "ddcl_lq").acc.mean, b = s.method(p + "ddcl_ols").acc.mean;
    order = order && a >= b;
    detail += fmt("d=%.0f %.3f/%.3f  ", d, a, b);
  }
  const double d10 = s.method("d=10/ddcl_lq").acc.mean;
  const double q200 = s.method("d=200/ddcl_lq").acc.mean, dc200 = s.method("d=200/deepcluster_lite").acc.mean;
  return {order && d10 >= 0.95 && q200 > dc200,
          "L_q/L_OLS ACC " + detail + fmt("; d=10 L_q %.3f (need >= 0.95); d=200 L_q %.3f vs DeepCluster-lite %.3f", d10, q200, dc200)};
}

Verdict end_to_end() {
  if (!have_digits()) return {false, "digits CSV unavailable (set DDCL_DIGITS_CSV)"};
  const ExperimentSummary s = run_block5(options("block5"));
  const double q = s.method("ddcl_lq").acc.mean, o = s.method("ddcl_ols").acc.mean, dc = s.method("deepcluster_e2e").acc.mean;
  return {q > o && q > dc, fmt("ACC L_q %.3f, L_OLS %.3f, DeepCluster-lite e2e %.3f (need L_q above both)", q, o, dc)};
}

Verdict streaming() {
  if (!have_digits()) return {false, "digits CSV unavailable (set DDCL_DIGITS_CSV)"};
  const ExperimentSummary s = run_block6(options("block6"));
  const double gap = s.check("acc_gap"), pooled = s.check("pooled_std");
  const double viol = s.check("simplex_violations"), endpoint = s.check("s_endpoint_failures");
  return {gap <= 2.0 * pooled && viol == 0 && endpoint == 0,
          fmt("ACC incremental %.3f vs minibatch k-means %.3f (gap %.3f, 2 pooled std %.3f); ",
              s.method("incremental_ddcl").acc.mean, s.method("minibatch_kmeans").acc.mean, gap, 2.0 * pooled) +
              fmt("simplex violations %.0f; S endpoint failures %.0f", viol, endpoint)};
}

Verdict metric_oracles() {
  Rng rng(12);
  int acc_bad = 0, cases = 0;
  double oracle_gap = 0.0, ari_max = 0.0;
  for (int k = 1; k <= 6; ++k)
    for (int it = 0; it < 50; ++it) {
      const std::size_t n = 5 + rng.below(100);
      std::vector<int> y(n), p(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.below(k));
        p[i] = static_cast<int>(rng.below(k));
      }
      if (std::abs(clustering_accuracy(y, p) - oracle::factorial_acc(y, p, k)) > 1e-12) ++acc_bad;
      oracle_gap = std::max(oracle_gap, std::abs(ari(y, p) - oracle::pair_count_ari(y, p)));
      oracle_gap = std::max(oracle_gap, std::abs(nmi(y, p) - oracle::entropy_nmi(y, p)));
      ++cases;
    }
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(500 + s);
    std::vector<int> a(1000), b(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      a[i] = static_cast<int>(r.below(5));
      b[i] = static_cast<int>(r.below(5));
    }
    ari_max = std::max(ari_max, std::abs(ari(a, b)));
  }
  return {acc_bad == 0 && ari_max <= 0.05 && oracle_gap <= 1e-10,
          fmt("ACC vs factorial oracle: %.0f/%.0f mismatches; max |ARI| random labelings %.4f (tol 0.05); NMI/ARI oracle gap %.2e",
              acc_bad, cases, ari_max, oracle_gap)};
}

Verdict simplex() {
  Rng rng(13);
  double worst = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const std::size_t k = 1 + rng.below(8);
    Vec v(k);
    for (double& x : v) x = rng.normal(0.0, 2.0);
    const Vec p = project_simplex(v), o = oracle::simplex_active_set(v);
    for (std::size_t j = 0; j < k; ++j) worst = std::max(worst, std::abs(p[j] - o[j]));
  }
  return {worst <= 1e-10, fmt("1000 vectors, k <= 8: max deviation from active-set oracle %.2e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"decomposition identity", decomposition},
      {"gradient exactness", gradients},
      {"stop-gradient equivalence", stop_gradient},
      {"collapse dichotomy", collapse},
      {"Block 1 accuracy", block1_accuracy},
      {"feedback cycle", feedback},
      {"monotonicity of V in T", v_monotone},
      {"Lyapunov certificate", lyapunov},
      {"high-dimensional ordering", high_dim},
      {"end-to-end ordering", end_to_end},
      {"streaming parity", streaming},
      {"metric oracles", metric_oracles},
      {"simplex projection optimality", simplex},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
