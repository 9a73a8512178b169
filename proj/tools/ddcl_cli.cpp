#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddcl/datasets.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/experiments.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/reduced_flow.hpp"
#include "ddcl/report.hpp"

using namespace ddcl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheck = 5;

struct Common {
  std::uint64_t seed = 0;
  int seeds = 0;
  std::string out;
  std::string config;
  bool check = false;
  std::string data;
  int entropy_sign = 0;
  std::string proto_mode;
  std::string stop_gradient;
  int epochs = 0;
  bool verbose = false;
  bool blobs = false;
};

void add_common(CLI::App* app, Common& c, bool needs_data) {
  app->add_option("--seed", c.seed, "first seed");
  app->add_option("--seeds", c.seeds, "number of seeds (0 = block default)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--config", c.config, "flat JSON config overriding run settings");
  app->add_flag("--check", c.check, "enforce acceptance thresholds (exit 5 on failure)");
  if (needs_data) app->add_option("--data", c.data, "digits CSV (64 features + label)");
  app->add_option("--entropy-sign", c.entropy_sign, "-1 rewards entropy, +1 penalizes it")->check(CLI::IsMember({-1, 1}));
  app->add_option("--proto-mode", c.proto_mode, "direct or dual")->check(CLI::IsMember({"direct", "dual"}));
  app->add_option("--stop-gradient", c.stop_gradient, "on or off")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--epochs", c.epochs, "override the epoch count");
  app->add_flag("-v,--verbose", c.verbose, "per-run progress on stderr");
}

ExperimentOptions to_options(const Common& c) {
  ExperimentOptions o;
  o.out_dir = c.out;
  o.seeds = c.seeds;
  o.seed = c.seed;
  o.data_path = c.data;
  o.verbose = c.verbose;
  o.epochs = c.epochs;
  o.blobs_fallback = c.blobs;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config '" + c.config + "'");
    try {
      o.config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + c.config + "': " + e.what());
    }
  }
  if (c.entropy_sign != 0) o.entropy_sign = c.entropy_sign;
  if (!c.proto_mode.empty()) o.proto_mode = parse_prototype_mode(c.proto_mode);
  if (!c.stop_gradient.empty()) o.stop_gradient = c.stop_gradient == "on";
  return o;
}

struct CheckList {
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    std::printf("%s  %s\n", cond ? "PASS" : "FAIL", what.c_str());
    ok = ok && cond;
  }
};

std::string f3(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

void print_summary(const ExperimentSummary& s) {
  std::printf("%s (%d seeds)\n", s.block.c_str(), s.seeds);
  for (const auto& [name, m] : s.methods)
    std::printf("  %-32s ACC %.3f +- %.3f  NMI %.3f  ARI %.3f\n", name.c_str(), m.acc.mean, m.acc.std, m.nmi.mean, m.ari.mean);
  for (const auto& [name, v] : s.checks) std::printf("  %-40s %.6g\n", name.c_str(), v);
}

int check_block(const ExperimentSummary& s) {
  CheckList c;
  if (s.block == "block1") {
    c.expect(s.check("v_violations") == 0, "zero V violations");
    c.expect(s.check("collapses_lq_total") == 0, "zero L_q collapses");
    c.expect(s.check("collapses/moons/T=1/ols") > 0, "L_OLS collapses at T=1 on Moons");
    c.expect(std::abs(s.method("moons/lq").acc.mean - 0.847) <= 0.05, "Moons ACC " + f3(s.method("moons/lq").acc.mean) + " within 0.05 of 0.847");
    c.expect(s.method("blobs/lq").acc.mean > 0.9, "Blobs ACC " + f3(s.method("blobs/lq").acc.mean) + " > 0.9");
    c.expect(s.check("corr_sk/moons/lq") <= -0.3, "Moons corr(S,K) " + f3(s.check("corr_sk/moons/lq")) + " <= -0.3");
  } else if (s.block == "block2") {
    const double a = s.method("ddcl_lq").acc.mean;
    c.expect(a >= 0.5 && a <= 0.7, "DDCL(L_q) ACC " + f3(a) + " in [0.50, 0.70]");
    c.expect(s.check("corr_sk/ddcl_lq") <= -0.5, "corr(S,K) " + f3(s.check("corr_sk/ddcl_lq")) + " <= -0.5");
    c.expect(s.check("v_violations") == 0, "zero V violations");
  } else if (s.block == "block3") {
    for (int d : {10, 50, 200, 500, 1000, 5000}) {
      const std::string p = "d=" + std::to_string(d) + "/";
      c.expect(s.method(p + "ddcl_lq").acc.mean >= s.method(p + "ddcl_ols").acc.mean, p + " L_q >= L_OLS");
    }
    c.expect(s.method("d=10/ddcl_lq").acc.mean >= 0.95, "d=10 L_q ACC >= 0.95");
    c.expect(s.method("d=200/ddcl_lq").acc.mean > s.method("d=200/deepcluster_lite").acc.mean, "d=200 L_q > DeepCluster-lite");
  } else if (s.block == "block5") {
    const double q = s.method("ddcl_lq").acc.mean;
    c.expect(q > s.method("ddcl_ols").acc.mean, "L_q ACC " + f3(q) + " > L_OLS " + f3(s.method("ddcl_ols").acc.mean));
    c.expect(q > s.method("deepcluster_e2e").acc.mean, "L_q ACC " + f3(q) + " > DeepCluster e2e " + f3(s.method("deepcluster_e2e").acc.mean));
  } else if (s.block == "block6") {
    c.expect(s.check("acc_gap") <= 2.0 * s.check("pooled_std"), "incremental within 2 pooled std of minibatch k-means");
    c.expect(s.check("simplex_violations") == 0, "zero simplex violations");
    c.expect(s.check("s_endpoint_failures") == 0, "S(P) endpoint >= first batch");
  }
  return c.ok ? kExitOk : kExitCheck;
}

std::vector<int> read_labels(const std::string& path) {
  const LabeledDataset ds = load_csv(path, std::nullopt);
  std::vector<int> y;
  for (std::size_t i = 0; i < ds.X.rows; ++i) {
    const double v = ds.X(i, ds.X.cols - 1);
    if (v != std::floor(v)) throw DataError("label file '" + path + "' has a non-integer label at row " + std::to_string(i + 1));
    y.push_back(static_cast<int>(v));
  }
  return y;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep dual competitive learning experiments"};
  app.require_subcommand(1);
  std::string simd = "auto";
  app.add_option("--simd", simd, "kernel level: auto, scalar, avx2, neon")->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

  Common c1, c2, c3, c5, c6;
  auto* b1 = app.add_subcommand("block1", "synthetic 2-D datasets, fixed temperatures");
  add_common(b1, c1, false);
  auto* b2 = app.add_subcommand("block2", "digits, PCA-20 frozen features");
  add_common(b2, c2, true);
  auto* b3 = app.add_subcommand("block3", "high-dimensional MADELON-style sweep");
  add_common(b3, c3, false);
  auto* b5 = app.add_subcommand("block5", "end-to-end MLP backbone on digits");
  add_common(b5, c5, true);
  auto* b6 = app.add_subcommand("block6", "single-pass streaming");
  add_common(b6, c6, true);
  b6->add_flag("--blobs", c6.blobs, "use Blobs instead of digits");

  int gc_instances = 100;
  std::uint64_t gc_seed = 0;
  std::size_t gc_d = 5, gc_k = 3;
  double gc_T = 0.7;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of all analytic gradients");
  gc->add_option("--instances", gc_instances);
  gc->add_option("--seed", gc_seed);
  gc->add_option("--d", gc_d);
  gc->add_option("--k", gc_k);
  gc->add_option("--T", gc_T);

  std::uint64_t fl_seed = 0;
  std::string fl_out;
  LossWeights fl_w{0.0, 0.0, 0.01, 0.5, -1};
  FlowOptions fl_opt;
  bool fl_check = false;
  auto* fl = app.add_subcommand("flow", "reduced projected-gradient flow on Blobs; prints the certificate JSON");
  fl->add_option("--seed", fl_seed);
  fl->add_option("--out", fl_out, "directory for certificate and energy CSV");
  fl->add_option("--beta", fl_w.beta);
  fl->add_option("--gamma", fl_w.gamma);
  fl->add_option("--eta", fl_w.eta);
  fl->add_option("--lambda", fl_w.lambda);
  fl->add_option("--entropy-sign", fl_w.entropy_sign)->check(CLI::IsMember({-1, 1}));
  fl->add_option("--steps", fl_opt.steps);
  fl->add_option("--step-p", fl_opt.step_P);
  fl->add_option("--step-q", fl_opt.step_q);
  fl->add_flag("--check", fl_check);

  std::string gd_kind = "moons", gd_out;
  std::size_t gd_n = 300, gd_k = 4, gd_d = 10, gd_dinf = 5;
  double gd_noise = 0.1, gd_ratio = 0.5, gd_turns = 2.0, gd_box = 10.0, gd_sd = 1.0, gd_sep = 4.0, gd_minsep = 0.0;
  std::uint64_t gd_seed = 0;
  auto* gd = app.add_subcommand("gen-data", "write a synthetic dataset as CSV (label last)");
  gd->add_option("--kind", gd_kind)->check(CLI::IsMember({"moons", "circles", "spiral", "blobs", "madelon"}));
  gd->add_option("--out", gd_out)->required();
  gd->add_option("--n", gd_n);
  gd->add_option("--k", gd_k);
  gd->add_option("--d", gd_d);
  gd->add_option("--d-informative", gd_dinf);
  gd->add_option("--noise", gd_noise);
  gd->add_option("--radius-ratio", gd_ratio);
  gd->add_option("--turns", gd_turns);
  gd->add_option("--box", gd_box);
  gd->add_option("--sd", gd_sd);
  gd->add_option("--separation", gd_sep);
  gd->add_option("--min-separation", gd_minsep);
  gd->add_option("--seed", gd_seed);

  std::string mt_true, mt_pred;
  auto* mt = app.add_subcommand("metrics", "ACC, NMI and ARI between two label files (last column)");
  mt->add_option("true_labels", mt_true)->required();
  mt->add_option("pred_labels", mt_pred)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simd != "auto") {
      const kernels::Level lv = simd == "scalar" ? kernels::Level::Scalar : simd == "avx2" ? kernels::Level::Avx2 : kernels::Level::Neon;
      if (!kernels::select(lv)) throw ConfigError("kernel level '" + simd + "' is not available on this machine");
    }
    auto run_block = [&](ExperimentSummary (*fn)(const ExperimentOptions&), const Common& c) {
      const ExperimentSummary s = fn(to_options(c));
      print_summary(s);
      return c.check ? check_block(s) : kExitOk;
    };
    if (*b1) return run_block(run_block1, c1);
    if (*b2) return run_block(run_block2, c2);
    if (*b3) return run_block(run_block3, c3);
    if (*b5) return run_block(run_block5, c5);
    if (*b6) return run_block(run_block6, c6);
    if (*gc) {
      const auto rows = gradcheck_suite(gc_instances, gc_seed, gc_d, gc_k, gc_T);
      bool ok = true;
      for (const auto& r : rows) {
        const bool pass = r.max_rel_err <= 1e-4;
        ok = ok && pass;
        std::printf("%s  %-28s instances=%d max_rel_err=%.3e\n", pass ? "PASS" : "FAIL", r.name.c_str(), r.instances, r.max_rel_err);
      }
      return ok ? kExitOk : kExitCheck;
    }
    if (*fl) {
      const FlowRun fr = run_blobs_flow(fl_seed, fl_w, fl_opt);
      const std::string js = to_json(fr.cert);
      std::printf("%s\n", js.c_str());
      if (!fl_out.empty()) {
        ensure_dir(fl_out);
        write_text(join_path(fl_out, "flow_certificate.json"), js + "\n");
        std::string csv = "step,energy\n";
        for (std::size_t i = 0; i < fr.cert.energy.size(); ++i) csv += std::to_string(i) + "," + fmt_double(fr.cert.energy[i]) + "\n";
        write_text(join_path(fl_out, "energy.csv"), csv);
        Series s{"E", {}, fr.cert.energy};
        for (std::size_t i = 0; i < s.y.size(); ++i) s.x.push_back(static_cast<double>(i));
        write_text(join_path(fl_out, "energy.svg"), svg_line_chart("Energy along the reduced flow", "step", "E", {s}));
      }
      if (fl_check) {
        CheckList c;
        c.expect(fr.cert.max_increase <= 1e-9, "max energy increase <= 1e-9");
        c.expect(fr.cert.bounded, "trajectory bounded");
        c.expect(fr.cert.final_kkt < 1e-3, "final KKT residual < 1e-3");
        return c.ok ? kExitOk : kExitCheck;
      }
      return kExitOk;
    }
    if (*gd) {
      LabeledDataset ds;
      if (gd_kind == "moons") ds = make_moons(gd_n, gd_noise, gd_seed);
      else if (gd_kind == "circles") ds = make_circles(gd_n, gd_noise, gd_ratio, gd_seed);
      else if (gd_kind == "spiral") ds = make_spiral(gd_n, gd_turns, gd_noise, gd_seed);
      else if (gd_kind == "blobs") ds = make_blobs(gd_n, gd_k, gd_box, gd_sd, gd_seed, gd_minsep);
      else ds = make_madelon_style(gd_n, gd_d, gd_dinf, gd_sep, gd_seed);
      save_csv(ds, gd_out);
      std::printf("wrote %zu x %zu to %s\n", ds.n(), ds.d(), gd_out.c_str());
      return kExitOk;
    }
    if (*mt) {
      const auto a = read_labels(mt_true), b = read_labels(mt_pred);
      if (a.size() != b.size()) throw DataError("label files differ in length");
      const ClusterScores s = score_all(a, b);
      nlohmann::json j;
      j["acc"] = s.acc;
      j["nmi"] = s.nmi;
      j["ari"] = s.ari;
      std::printf("%s\n", j.dump(2).c_str());
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
