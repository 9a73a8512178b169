#include "ddcl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "ddcl/assignment.hpp"
#include "ddcl/backbone.hpp"
#include "ddcl/baselines.hpp"
#include "ddcl/batch_trainer.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/incremental_trainer.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"
#include "ddcl/rng.hpp"

namespace ddcl {

unsigned resolve_threads(unsigned requested) {
  unsigned t = requested;
  if (t == 0) {
    t = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DDCL_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) t = std::min<unsigned>(t, static_cast<unsigned>(v));
    }
  }
  return std::max(1u, t);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

LabeledDataset load_digits(const std::string& path_in) {
  std::string path = path_in;
  if (path.empty())
    if (const char* env = std::getenv("DDCL_DIGITS_CSV")) path = env;
  const std::string hint =
      "; generate it with `python3 tools/export_digits.py digits.csv` (needs scikit-learn) and pass --data digits.csv";
  if (path.empty()) throw DataError("no digits CSV given" + hint);
  if (!std::filesystem::exists(path)) throw DataError("digits CSV '" + path + "' not found" + hint);
  LabeledDataset ds = load_csv(path, -1);
  ds.name = "digits";
  return ds;
}

Matrix pca_features(const Matrix& X, std::size_t m) {
  PcaOptions po;
  po.n_components = m;
  po.standardize = true;
  return pca_standardize(X, po);
}

namespace {

RunConfig resolve(RunConfig base, const ExperimentOptions& opt) {
  if (!opt.config.is_null()) base = config_from_json(opt.config, base);
  if (opt.entropy_sign) base.entropy_sign = *opt.entropy_sign;
  if (opt.proto_mode) base.prototype_mode = *opt.proto_mode;
  if (opt.stop_gradient) base.stop_gradient = *opt.stop_gradient;
  if (opt.epochs > 0) base.epochs = opt.epochs;
  validate(base);
  return base;
}

bool has_key(const ExperimentOptions& opt, const char* key) { return opt.config.is_object() && opt.config.contains(key); }

struct Score {
  double acc = 0, nmi = 0, ari = 0;
};

Score score(const std::vector<int>& y, const std::vector<int>& lab) {
  const ClusterScores s = score_all(y, lab);
  return {s.acc, s.nmi, s.ari};
}

MethodScores collect(const std::vector<Score>& v) {
  std::vector<double> a, n, r;
  for (const auto& s : v) {
    a.push_back(s.acc);
    n.push_back(s.nmi);
    r.push_back(s.ari);
  }
  return {summarize(a), summarize(n), summarize(r)};
}

double safe_corr(const TrainTrace& t) {
  try {
    return feedback_correlation(t);
  } catch (const DegenerateInput&) {
    return std::nan("");
  }
}

double nanmean(const std::vector<double>& v) {
  double s = 0;
  int c = 0;
  for (double x : v)
    if (std::isfinite(x)) s += x, ++c;
  return c ? s / c : std::nan("");
}

void log(const ExperimentOptions& opt, const char* fmtstr, const std::string& a, double b = 0.0) {
  if (opt.verbose) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    std::fprintf(stderr, fmtstr, a.c_str(), b);
  }
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_summary(const ExperimentOptions& opt, const ExperimentSummary& s, const RunConfig& cfg) {
  if (opt.out_dir.empty()) return;
  write_text(join_path(opt.out_dir, "summary.json"), to_json(s).dump(2) + "\n");
  write_text(join_path(opt.out_dir, "config.json"), config_to_json(cfg).dump(2) + "\n");
}

std::string trace_dir(const ExperimentOptions& opt) {
  if (opt.out_dir.empty()) return {};
  const std::string d = join_path(opt.out_dir, "traces");
  ensure_dir(d);
  return d;
}

}  // namespace

// Block 1: frozen 2-D features, fixed temperatures.
ExperimentSummary run_block1(const ExperimentOptions& opt) {
  const int seeds = opt.seeds > 0 ? opt.seeds : 10;
  RunConfig base;
  base.epochs = 200;
  base.lr_dcl = 0.1;
  base.stop_gradient = true;
  base = resolve(base, opt);
  const std::vector<std::string> names = {"moons", "circles", "spiral", "blobs"};
  const std::vector<double> temps = {0.1, 0.5, 1.0};
  const std::vector<MainLoss> losses = {MainLoss::Lq, MainLoss::LOLS};
  if (!opt.out_dir.empty()) ensure_dir(opt.out_dir);
  const std::string tdir = trace_dir(opt);

  struct Job {
    std::size_t ds;
    double T;
    MainLoss loss;
    int seed;
  };
  struct Out {
    Score sc;
    bool collapsed = false;
    int viol = 0;
    double corr = 0, final_S = 0;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < names.size(); ++d)
    for (double T : temps)
      for (MainLoss l : losses)
        for (int s = 0; s < seeds; ++s) jobs.push_back({d, T, l, s});
  std::vector<Out> outs(jobs.size());

  parallel_for(jobs.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    const Job& j = jobs[i];
    const std::uint64_t s = opt.seed + static_cast<std::uint64_t>(j.seed);
    LabeledDataset ds;
    switch (j.ds) {
      case 0: ds = make_moons(300, 0.1, 100 + s); break;
      case 1: ds = make_circles(300, 0.05, 0.5, 100 + s); break;
      case 2: ds = make_spiral(300, 2.0, 0.05, 100 + s); break;
      default: ds = make_blobs(400, 4, 10.0, 1.0, 100 + s, 8.0); break;
    }
    const Matrix Z = standardize(ds.X);
    RunConfig cfg = base;
    cfg.k = static_cast<std::size_t>(ds.num_classes());
    cfg.T0 = cfg.T_min = j.T;
    cfg.loss_kind = j.loss;
    cfg.seed = s;
    const TrainResult r = train(Z, &ds.y, cfg);
    Out& o = outs[i];
    o.sc = score(ds.y, r.labels);
    const CollapseVerdict cv = detect_collapse(r.trace, r.P_init, r.P);
    o.collapsed = cv.collapsed;
    o.final_S = cv.final_S;
    o.viol = r.trace.v_violations();
    o.corr = safe_corr(r.trace);
    if (!tdir.empty())
      write_trace_csv(r.trace, join_path(tdir, names[j.ds] + "_T" + tag(j.T) + "_" + main_loss_name(j.loss) + "_s" +
                                                   std::to_string(j.seed) + ".csv"));
    log(opt, "block1 %s acc=%.3f\n", names[j.ds] + " T=" + tag(j.T) + " " + main_loss_name(j.loss), o.sc.acc);
  });

  ExperimentSummary sum;
  sum.block = "block1";
  sum.seeds = seeds;
  sum.config = config_to_json(base);
  int viol = 0, col_lq = 0;
  std::string table = "dataset,T,loss,acc_mean,acc_std,nmi_mean,ari_mean,collapses,v_violations,corr_sk_mean,final_s_mean\n";
  std::vector<Series> splot;
  for (std::size_t d = 0; d < names.size(); ++d) {
    std::map<MainLoss, std::vector<Score>> per_loss;
    std::map<MainLoss, std::vector<double>> corr_loss;
    std::map<MainLoss, Series> sser;
    for (MainLoss l : losses) sser[l].name = names[d] + " " + main_loss_name(l);
    for (double T : temps)
      for (MainLoss l : losses) {
        std::vector<Score> sc;
        std::vector<double> corr, fs;
        int col = 0, vv = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i)
          if (jobs[i].ds == d && jobs[i].T == T && jobs[i].loss == l) {
            sc.push_back(outs[i].sc);
            corr.push_back(outs[i].corr);
            fs.push_back(outs[i].final_S);
            col += outs[i].collapsed;
            vv += outs[i].viol;
          }
        const std::string key = names[d] + "/T=" + tag(T) + "/" + main_loss_name(l);
        const MethodScores ms = collect(sc);
        sum.methods[key] = ms;
        sum.checks["collapses/" + key] = col;
        sum.checks["corr_sk/" + key] = nanmean(corr);
        viol += vv;
        if (l == MainLoss::Lq) col_lq += col;
        per_loss[l].insert(per_loss[l].end(), sc.begin(), sc.end());
        corr_loss[l].insert(corr_loss[l].end(), corr.begin(), corr.end());
        sser[l].x.push_back(T);
        sser[l].y.push_back(mean(fs));
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%g,%s,%.6f,%.6f,%.6f,%.6f,%d,%d,%s,%.6g\n", names[d].c_str(), T,
                      main_loss_name(l), ms.acc.mean, ms.acc.std, ms.nmi.mean, ms.ari.mean, col, vv,
                      fmt_double(nanmean(corr)).c_str(), mean(fs));
        table += buf;
      }
    for (MainLoss l : losses) {
      sum.methods[names[d] + "/" + main_loss_name(l)] = collect(per_loss[l]);
      sum.checks["corr_sk/" + names[d] + "/" + main_loss_name(l)] = nanmean(corr_loss[l]);
      splot.push_back(sser[l]);
    }
  }
  sum.checks["v_violations"] = viol;
  sum.checks["collapses_lq_total"] = col_lq;
  if (!opt.out_dir.empty()) {
    write_text(join_path(opt.out_dir, "block1_table.csv"), table);
    write_text(join_path(opt.out_dir, "separation_vs_T.svg"),
               svg_line_chart("Final separation S(P) vs temperature", "T", "S(P)", splot));
  }
  write_summary(opt, sum, base);
  return sum;
}

namespace {

RunConfig block2_config(const ExperimentOptions& opt) {
  RunConfig c;
  c.k = 10;
  c.T0 = 2.0;
  c.T_min = 0.5;
  c.tau = 80.0;
  c.epochs = 200;
  c.lr_dcl = 0.5;
  c.stop_gradient = true;
  return resolve(c, opt);
}

}  // namespace

// Block 2: digits, PCA-20 frozen features, annealed temperature.
ExperimentSummary run_block2(const ExperimentOptions& opt) {
  const int seeds = opt.seeds > 0 ? opt.seeds : 5;
  const LabeledDataset ds = load_digits(opt.data_path);
  const Matrix Z = pca_features(ds.X, 20);
  const RunConfig base = block2_config(opt);
  if (!opt.out_dir.empty()) ensure_dir(opt.out_dir);
  const std::string tdir = trace_dir(opt);

  const std::vector<std::string> methods = {"ddcl_lq",     "ddcl_ols",   "deepcluster_lite", "kmeans",
                                            "kmeans_pca", "ddcl_lq_fixed_T0.1", "ddcl_lq_fixed_T2"};
  std::vector<std::vector<Score>> res(methods.size(), std::vector<Score>(seeds));
  std::vector<double> corr_lq(seeds), corr_ols(seeds);
  std::vector<int> viol(seeds);
  std::vector<Series> sk(seeds);

  parallel_for(methods.size() * seeds, resolve_threads(opt.threads), [&](std::size_t i) {
    const std::size_t m = i / seeds;
    const int si = static_cast<int>(i % seeds);
    const std::uint64_t s = opt.seed + static_cast<std::uint64_t>(si);
    const std::string& name = methods[m];
    std::vector<int> lab;
    if (name.rfind("ddcl", 0) == 0) {
      RunConfig cfg = base;
      cfg.seed = s;
      if (name == "ddcl_ols") cfg.loss_kind = MainLoss::LOLS;
      if (name == "ddcl_lq") cfg.loss_kind = MainLoss::Lq;
      if (name == "ddcl_lq_fixed_T0.1") cfg.loss_kind = MainLoss::Lq, cfg.T0 = cfg.T_min = 0.1;
      if (name == "ddcl_lq_fixed_T2") cfg.loss_kind = MainLoss::Lq, cfg.T0 = cfg.T_min = 2.0;
      const TrainResult r = train(Z, &ds.y, cfg);
      lab = r.labels;
      if (name == "ddcl_lq") {
        corr_lq[si] = safe_corr(r.trace);
        viol[si] += r.trace.v_violations();
        sk[si] = {"seed " + std::to_string(si), r.trace.column("s"), r.trace.column("k_mean")};
      }
      if (name == "ddcl_ols") corr_ols[si] = safe_corr(r.trace);
      if (!tdir.empty()) write_trace_csv(r.trace, join_path(tdir, name + "_s" + std::to_string(si) + ".csv"));
    } else if (name == "deepcluster_lite") {
      DeepClusterConfig dc;
      dc.k = 10;
      dc.rounds = 3;
      dc.n_init = 20;
      dc.seed = s;
      lab = deepcluster_lite(Z, &ds.y, dc).labels;
    } else if (name == "kmeans") {
      lab = kmeans(ds.X, 10, 20, 300, s).labels;
    } else {
      lab = kmeans(Z, 10, 20, 300, s).labels;
    }
    res[m][si] = score(ds.y, lab);
    log(opt, "block2 %s acc=%.3f\n", name + " seed " + std::to_string(si), res[m][si].acc);
  });

  ExperimentSummary sum;
  sum.block = "block2";
  sum.seeds = seeds;
  sum.config = config_to_json(base);
  for (std::size_t m = 0; m < methods.size(); ++m) sum.methods[methods[m]] = collect(res[m]);
  sum.checks["corr_sk/ddcl_lq"] = nanmean(corr_lq);
  sum.checks["corr_sk/ddcl_ols"] = nanmean(corr_ols);
  int vv = 0;
  for (int v : viol) vv += v;
  sum.checks["v_violations"] = vv;
  sum.checks["annealing_beats_fixed"] = sum.methods["ddcl_lq"].acc.mean > sum.methods["ddcl_lq_fixed_T0.1"].acc.mean &&
                                        sum.methods["ddcl_lq"].acc.mean > sum.methods["ddcl_lq_fixed_T2"].acc.mean;
  if (!opt.out_dir.empty()) {
    std::vector<Series> ks;
    for (int si = 0; si < seeds; ++si) {
      Series a{sk[si].name, {}, sk[si].y};
      for (std::size_t e = 0; e < a.y.size(); ++e) a.x.push_back(static_cast<double>(e));
      ks.push_back(a);
    }
    write_text(join_path(opt.out_dir, "concentration.svg"), svg_line_chart("Mean concentration K per epoch (L_q)", "epoch", "K", ks));
  }
  write_summary(opt, sum, base);
  return sum;
}

// Block 3: MADELON-style, n = 100, growing dimension, dual prototypes.
ExperimentSummary run_block3(const ExperimentOptions& opt) {
  const int seeds = opt.seeds > 0 ? opt.seeds : 5;
  RunConfig base;
  base.k = 2;
  base.tau = 40.0;
  base.epochs = 300;
  base.lr_dcl = 0.9;
  base.prototype_mode = PrototypeMode::Dual;
  base.dual_normalize = true;
  base = resolve(base, opt);
  const bool fixed_T0 = has_key(opt, "T0"), fixed_Tmin = has_key(opt, "T_min");
  const std::vector<std::size_t> dims = {10, 50, 200, 500, 1000, 5000};
  const std::vector<std::string> methods = {"ddcl_lq", "ddcl_ols", "deepcluster_lite", "kmeans", "kmeans_pca"};
  if (!opt.out_dir.empty()) ensure_dir(opt.out_dir);
  const std::string tdir = trace_dir(opt);

  std::vector<std::vector<std::vector<Score>>> res(dims.size(),
                                                  std::vector<std::vector<Score>>(methods.size(), std::vector<Score>(seeds)));
  std::vector<int> viol(dims.size() * seeds, 0);
  parallel_for(dims.size() * seeds, resolve_threads(opt.threads), [&](std::size_t i) {
    const std::size_t di = i / seeds;
    const int si = static_cast<int>(i % seeds);
    const std::uint64_t s = opt.seed + static_cast<std::uint64_t>(si);
    const LabeledDataset ds = make_madelon_style(100, dims[di], 5, 4.0, 1000 + s);
    const Matrix& Z = ds.X;
    // temperature schedule relative to the data scale
    Matrix Zc = Z;
    const Vec mu = col_means(Z);
    for (std::size_t r = 0; r < Zc.rows; ++r)
      for (std::size_t c = 0; c < Zc.cols; ++c) Zc(r, c) -= mu[c];
    Matrix G = matmul_nt(Zc, Zc);
    for (double& v : G.data) v /= static_cast<double>(Z.rows);
    double tr = 0.0;
    for (std::size_t r = 0; r < G.rows; ++r) tr += G(r, r);
    const double l1 = sym_lambda_max(G);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<int> lab;
      const std::string& name = methods[m];
      if (name == "ddcl_lq" || name == "ddcl_ols") {
        RunConfig cfg = base;
        cfg.seed = s;
        cfg.loss_kind = name == "ddcl_lq" ? MainLoss::Lq : MainLoss::LOLS;
        if (!fixed_T0) cfg.T0 = tr;
        if (!fixed_Tmin) cfg.T_min = 0.5 * l1;
        cfg.T0 = std::max(cfg.T0, cfg.T_min);
        const TrainResult r = train(Z, &ds.y, cfg);
        lab = r.labels;
        viol[i] += r.trace.v_violations();
        if (!tdir.empty())
          write_trace_csv(r.trace, join_path(tdir, name + "_d" + std::to_string(dims[di]) + "_s" + std::to_string(si) + ".csv"));
      } else if (name == "deepcluster_lite") {
        DeepClusterConfig dc;
        dc.k = 2;
        dc.rounds = 1;
        dc.n_init = 20;
        dc.seed = s;
        lab = deepcluster_lite(Z, &ds.y, dc).labels;
      } else if (name == "kmeans") {
        lab = kmeans(Z, 2, 20, 300, s).labels;
      } else {
        PcaOptions po;
        po.n_components = std::min<std::size_t>(10, dims[di]);
        lab = kmeans(pca_standardize(Z, po), 2, 20, 300, s).labels;
      }
      res[di][m][si] = score(ds.y, lab);
      log(opt, "block3 %s acc=%.3f\n", name + " d=" + std::to_string(dims[di]) + " seed " + std::to_string(si),
          res[di][m][si].acc);
    }
  });

  ExperimentSummary sum;
  sum.block = "block3";
  sum.seeds = seeds;
  sum.config = config_to_json(base);
  std::vector<Series> acc_plot(methods.size()), nmi_plot(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) acc_plot[m].name = nmi_plot[m].name = methods[m];
  for (std::size_t di = 0; di < dims.size(); ++di)
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const MethodScores ms = collect(res[di][m]);
      sum.methods["d=" + std::to_string(dims[di]) + "/" + methods[m]] = ms;
      acc_plot[m].x.push_back(static_cast<double>(dims[di]));
      acc_plot[m].y.push_back(ms.acc.mean);
      nmi_plot[m].x.push_back(static_cast<double>(dims[di]));
      nmi_plot[m].y.push_back(ms.nmi.mean);
    }
  int vv = 0;
  for (int v : viol) vv += v;
  sum.checks["v_violations"] = vv;
  if (!opt.out_dir.empty()) {
    acc_plot.push_back({"d = n", {100, 100}, {0.5, 1.0}});
    write_text(join_path(opt.out_dir, "acc_vs_d.svg"), svg_line_chart("ACC vs dimension (n = 100)", "d", "ACC", acc_plot, true));
    write_text(join_path(opt.out_dir, "nmi_vs_d.svg"), svg_line_chart("NMI vs dimension (n = 100)", "d", "NMI", nmi_plot, true));
  }
  write_summary(opt, sum, base);
  return sum;
}

namespace {

MlpSpec block5_backbone() {
  MlpSpec spec;
  spec.dims = {64, 256, 128, 32};
  spec.batchnorm = true;
  spec.output_norm = true;
  return spec;
}

}  // namespace

// Block 5: end-to-end MLP backbone on digits.
ExperimentSummary run_block5(const ExperimentOptions& opt) {
  const int seeds = opt.seeds > 0 ? opt.seeds : 3;
  const LabeledDataset ds = load_digits(opt.data_path);
  const Matrix X = standardize(ds.X);
  RunConfig base;
  base.k = 10;
  base.T0 = 2.0;
  base.T_min = 0.5;
  base.tau = 80.0;
  base.epochs = 100;
  base.batch_size = 256;
  base.lr_backbone = 0.01;
  base.lr_dcl = 0.05;
  base.beta = 1.0;
  base.eta = 0.0;
  base.lambda = 1e-3;
  base.stop_gradient = false;
  base = resolve(base, opt);
  if (!opt.out_dir.empty()) ensure_dir(opt.out_dir);
  const std::string tdir = trace_dir(opt);
  const std::vector<std::string> methods = {"ddcl_lq", "ddcl_ols", "deepcluster_e2e", "kmeans_pca"};
  std::vector<std::vector<Score>> res(methods.size(), std::vector<Score>(seeds));
  std::vector<double> early_gap(seeds, 0.0);
  std::vector<TrainTrace> lq_tr(seeds), ols_tr(seeds);

  parallel_for(methods.size() * seeds, resolve_threads(opt.threads), [&](std::size_t i) {
    const std::size_t m = i / seeds;
    const int si = static_cast<int>(i % seeds);
    const std::uint64_t s = opt.seed + static_cast<std::uint64_t>(si);
    const std::string& name = methods[m];
    Rng init_rng(s);
    MlpParams bb = mlp_init(block5_backbone(), init_rng);
    std::vector<int> lab;
    if (name == "ddcl_lq" || name == "ddcl_ols") {
      RunConfig cfg = base;
      cfg.seed = s;
      cfg.loss_kind = name == "ddcl_lq" ? MainLoss::Lq : MainLoss::LOLS;
      TrainResult r = train(X, &ds.y, cfg, bb);
      lab = r.labels;
      if (!tdir.empty()) write_trace_csv(r.trace, join_path(tdir, name + "_s" + std::to_string(si) + ".csv"));
      (name == "ddcl_lq" ? lq_tr : ols_tr)[si] = std::move(r.trace);
    } else if (name == "deepcluster_e2e") {
      DeepClusterConfig dc;
      dc.k = 10;
      dc.rounds = base.epochs;
      dc.n_init = 3;
      dc.head_epochs = 1;
      dc.lr = base.lr_backbone;
      dc.batch = base.batch_size;
      dc.seed = s;
      const DeepClusterResult r = deepcluster_lite_e2e(X, bb, &ds.y, dc);
      lab = r.labels;
      if (!tdir.empty()) {
        std::string csv = "round,inertia,ce,acc,nmi,ari\n";
        for (const auto& row : r.trace)
          csv += std::to_string(row.round) + "," + fmt_double(row.inertia) + "," + fmt_double(row.ce) + "," +
                 fmt_double(row.acc) + "," + fmt_double(row.nmi) + "," + fmt_double(row.ari) + "\n";
        write_text(join_path(tdir, name + "_s" + std::to_string(si) + ".csv"), csv);
      }
    } else {
      lab = kmeans(pca_features(ds.X, 20), 10, 20, 300, s).labels;
    }
    res[m][si] = score(ds.y, lab);
    log(opt, "block5 %s acc=%.3f\n", name + " seed " + std::to_string(si), res[m][si].acc);
  });

  ExperimentSummary sum;
  sum.block = "block5";
  sum.seeds = seeds;
  sum.config = config_to_json(base);
  for (std::size_t m = 0; m < methods.size(); ++m) sum.methods[methods[m]] = collect(res[m]);
  // L_q vs L_OLS trace gap over the first 5 epochs relative to the final gap
  double early = 0, late = 0;
  int viol = 0;
  for (int si = 0; si < seeds; ++si) {
    const Vec a = lq_tr[si].column("l_q"), b = ols_tr[si].column("l_q");
    viol += lq_tr[si].v_violations() + ols_tr[si].v_violations();
    if (a.empty() || b.empty()) continue;
    const std::size_t m = std::min<std::size_t>(5, std::min(a.size(), b.size()));
    for (std::size_t e = 0; e < m; ++e) early += std::abs(a[e] - b[e]) / static_cast<double>(m * seeds);
    late += std::abs(a.back() - b.back()) / static_cast<double>(seeds);
  }
  sum.checks["early_lq_gap"] = early;
  sum.checks["final_lq_gap"] = late;
  sum.checks["v_violations"] = viol;
  if (!opt.out_dir.empty() && seeds > 0 && !lq_tr[0].rows.empty()) {
    std::vector<Series> pl = {{"L_q run", lq_tr[0].column("epoch"), lq_tr[0].column("acc")},
                              {"L_OLS run", ols_tr[0].column("epoch"), ols_tr[0].column("acc")}};
    write_text(join_path(opt.out_dir, "acc_per_epoch.svg"), svg_line_chart("End-to-end ACC per epoch (seed 0)", "epoch", "ACC", pl));
  }
  write_summary(opt, sum, base);
  return sum;
}

// Block 6: single-pass streaming on PCA-20 digits (or blobs).
ExperimentSummary run_block6(const ExperimentOptions& opt) {
  const int seeds = opt.seeds > 0 ? opt.seeds : 5;
  LabeledDataset ds;
  Matrix Z;
  std::size_t k;
  if (opt.blobs_fallback) {
    ds = make_blobs(400, 4, 10.0, 1.0, 100 + opt.seed, 8.0);
    Z = standardize(ds.X);
    k = 4;
  } else {
    ds = load_digits(opt.data_path);
    Z = pca_features(ds.X, 20);
    k = 10;
  }
  StreamConfig sc;
  sc.k = k;
  sc.B = 50;
  if (opt.config.is_object()) {
    for (auto it = opt.config.begin(); it != opt.config.end(); ++it) {
      const std::string& key = it.key();
      if (key == "B") sc.B = it.value().get<std::size_t>();
      else if (key == "T0") sc.T0 = it.value().get<double>();
      else if (key == "T_min") sc.T_min = it.value().get<double>();
      else if (key == "tau") sc.tau = it.value().get<double>();
      else if (key == "lr" || key == "lr_dcl") sc.lr = it.value().get<double>();
      else if (key == "mu") sc.mu = it.value().get<double>();
      else throw ConfigError("block6: unsupported config key '" + key + "'");
    }
  }
  RunConfig ceiling = block2_config(ExperimentOptions{});
  ceiling.k = k;
  if (!opt.out_dir.empty()) ensure_dir(opt.out_dir);
  const std::string tdir = trace_dir(opt);

  std::vector<Score> inc(seeds), mbk(seeds), ceil(seeds);
  std::vector<double> s_first(seeds), s_final(seeds);
  std::vector<long> viol(seeds), consumed(seeds);
  std::vector<TrainTrace> traces(seeds);
  parallel_for(static_cast<std::size_t>(seeds), resolve_threads(opt.threads), [&](std::size_t si) {
    const std::uint64_t s = opt.seed + si;
    Rng rng(s);
    const auto order = rng.permutation(Z.rows);
    StreamConfig c = sc;
    c.seed = s;
    StreamResult r = stream_train(Z, order, &ds.y, c);
    inc[si] = score(ds.y, r.labels);
    s_first[si] = r.first_S;
    s_final[si] = r.final_S;
    viol[si] = r.simplex_violations;
    consumed[si] = static_cast<long>(r.consumed.size());
    if (!tdir.empty()) write_trace_csv(r.trace, join_path(tdir, "incremental_s" + std::to_string(si) + ".csv"), true);
    traces[si] = std::move(r.trace);
    mbk[si] = score(ds.y, minibatch_kmeans(Z, order, k, sc.B, s).labels);
    RunConfig cc = ceiling;
    cc.seed = s;
    cc.record_metrics = false;
    ceil[si] = score(ds.y, train(Z, &ds.y, cc).labels);
    log(opt, "block6 %s acc=%.3f\n", "seed " + std::to_string(si), inc[si].acc);
  });

  ExperimentSummary sum;
  sum.block = "block6";
  sum.seeds = seeds;
  sum.methods["incremental_ddcl"] = collect(inc);
  sum.methods["minibatch_kmeans"] = collect(mbk);
  sum.methods["batch_ddcl_ceiling"] = collect(ceil);
  long vv = 0, endpoint_fail = 0, single_pass_fail = 0;
  for (int si = 0; si < seeds; ++si) {
    vv += viol[si];
    endpoint_fail += s_final[si] < s_first[si];
    single_pass_fail += consumed[si] != static_cast<long>(Z.rows);
  }
  const auto& a = sum.methods["incremental_ddcl"].acc;
  const auto& b = sum.methods["minibatch_kmeans"].acc;
  const double pooled = std::sqrt(0.5 * (a.std * a.std + b.std * b.std));
  sum.checks["simplex_violations"] = static_cast<double>(vv);
  sum.checks["s_first_mean"] = mean(s_first);
  sum.checks["s_final_mean"] = mean(s_final);
  sum.checks["s_endpoint_failures"] = static_cast<double>(endpoint_fail);
  sum.checks["single_pass_failures"] = static_cast<double>(single_pass_fail);
  sum.checks["acc_gap"] = std::abs(a.mean - b.mean);
  sum.checks["pooled_std"] = pooled;
  nlohmann::json cj;
  cj["k"] = sc.k;
  cj["B"] = sc.B;
  cj["T0"] = sc.T0;
  cj["T_min"] = sc.T_min;
  cj["tau"] = sc.tau;
  cj["lr"] = sc.lr;
  cj["mu"] = sc.mu;
  sum.config = cj;
  if (!opt.out_dir.empty()) {
    std::vector<Series> accs, ss;
    for (int si = 0; si < seeds; ++si) {
      accs.push_back({"seed " + std::to_string(si), traces[si].column("samples_seen"), traces[si].column("acc")});
      ss.push_back({"seed " + std::to_string(si), traces[si].column("samples_seen"), traces[si].column("s")});
    }
    write_text(join_path(opt.out_dir, "acc_vs_samples.svg"), svg_line_chart("Streaming ACC", "samples seen", "ACC", accs));
    write_text(join_path(opt.out_dir, "separation_vs_samples.svg"), svg_line_chart("Streaming S(P)", "samples seen", "S(P)", ss));
    write_text(join_path(opt.out_dir, "summary.json"), to_json(sum).dump(2) + "\n");
    write_text(join_path(opt.out_dir, "config.json"), cj.dump(2) + "\n");
  }
  return sum;
}

FlowRun run_blobs_flow(std::uint64_t seed, const LossWeights& w, const FlowOptions& opt) {
  const LabeledDataset ds = make_blobs(400, 4, 10.0, 1.0, 100 + seed, 8.0);
  FlowRun fr;
  fr.Z = standardize(ds.X);
  Rng rng(seed);
  const auto idx = rng.sample_without_replacement(fr.Z.rows, 4);
  fr.init.P = Matrix(fr.Z.cols, 4);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c < fr.Z.cols; ++c) fr.init.P(c, j) = fr.Z(idx[j], c);
  fr.init.Q = soft_assign_batch(fr.Z, fr.init.P, 1.0);
  fr.cert = run_flow(fr.Z, fr.init, w, opt, &fr.final_state);
  return fr;
}

namespace {

Matrix as_matrix(const Vec& v) {
  Matrix m(v.size(), 1);
  m.data = v;
  return m;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

double sample_loss(MainLoss kind, std::span<const double> z, const Matrix& P, std::span<const double> q) {
  if (kind == MainLoss::Lq) {
    double s = 0.0;
    for (std::size_t j = 0; j < P.cols; ++j) {
      double dj = 0.0;
      for (std::size_t c = 0; c < P.rows; ++c) dj += (z[c] - P(c, j)) * (z[c] - P(c, j));
      s += q[j] * dj;
    }
    return s;
  }
  const Vec pq = matvec(P, q);
  double s = 0.0;
  for (std::size_t c = 0; c < P.rows; ++c) s += (z[c] - pq[c]) * (z[c] - pq[c]);
  return s;
}

}  // namespace

std::vector<GradcheckRow> gradcheck_suite(int instances, std::uint64_t seed, std::size_t d, std::size_t k, double T) {
  if (instances < 1 || d < 1 || k < 2 || !(T > 0.0)) throw ConfigError("gradcheck: need instances >= 1, d >= 1, k >= 2, T > 0");
  std::map<std::string, GradcheckRow> rows;
  auto record = [&](const std::string& name, double err, double tol) {
    auto& r = rows[name];
    r.name = name;
    r.tolerance = tol;
    ++r.instances;
    r.max_rel_err = std::max(r.max_rel_err, err);
  };
  Rng rng(seed);
  for (int it = 0; it < instances; ++it) {
    const Matrix P = random_matrix(d, k, rng);
    Vec z(d);
    for (double& v : z) v = rng.normal();
    const Vec q = soft_assign(z, P, T);
    const Matrix zm = as_matrix(z);
    // P gradients with q held fixed
    const std::pair<LossKind, const char*> pk[] = {{LossKind::Lq, "grad_P/lq"}, {LossKind::LOLS, "grad_P/ols"},
                                                   {LossKind::V, "grad_P/v"}, {LossKind::Lsep, "grad_P/sep"},
                                                   {LossKind::Quad, "grad_P/quad"}};
    for (const auto& [kind, name] : pk) {
      auto f = [&, kind = kind](const Matrix& Pp) -> double {
        switch (kind) {
          case LossKind::Lq: return sample_loss(MainLoss::Lq, z, Pp, q);
          case LossKind::LOLS: return sample_loss(MainLoss::LOLS, z, Pp, q);
          case LossKind::V: return sample_loss(MainLoss::Lq, z, Pp, q) - sample_loss(MainLoss::LOLS, z, Pp, q);
          case LossKind::Lsep: return separation_loss(Pp);
          case LossKind::Quad: return 0.5 * 0.7 * frobenius_sq(Pp);
        }
        return 0.0;
      };
      record(name, finite_diff_check(f, P, grad_P(kind, z, P, q, 0.7)).max_rel_err, 1e-5);
    }
    // q gradients
    const Matrix qm = as_matrix(q);
    const std::pair<LossKind, const char*> qk[] = {{LossKind::Lq, "grad_q/lq"}, {LossKind::LOLS, "grad_q/ols"}, {LossKind::V, "grad_q/v"}};
    for (const auto& [kind, name] : qk) {
      auto f = [&, kind = kind](const Matrix& qq) -> double {
        if (kind == LossKind::Lq) return sample_loss(MainLoss::Lq, z, P, qq.data);
        if (kind == LossKind::LOLS) return sample_loss(MainLoss::LOLS, z, P, qq.data);
        return sample_loss(MainLoss::Lq, z, P, qq.data) - sample_loss(MainLoss::LOLS, z, P, qq.data);
      };
      record(name, finite_diff_check(f, qm, as_matrix(grad_q(kind, z, P, q))).max_rel_err, 1e-5);
    }
    // z gradients, stop-gradient and full chain
    for (MainLoss m : {MainLoss::Lq, MainLoss::LOLS}) {
      const LossKind kind = m == MainLoss::Lq ? LossKind::Lq : LossKind::LOLS;
      const std::string base = std::string("grad_z/") + main_loss_name(m);
      auto fs = [&](const Matrix& zz) { return sample_loss(m, zz.data, P, q); };
      record(base + "/stop_gradient", finite_diff_check(fs, zm, as_matrix(grad_z(kind, z, P, T, true))).max_rel_err, 1e-5);
      auto ff = [&](const Matrix& zz) { return sample_loss(m, zz.data, P, soft_assign(zz.data, P, T)); };
      record(base + "/full", finite_diff_check(ff, zm, as_matrix(grad_z(kind, z, P, T, false))).max_rel_err, 1e-4);
    }
    auto fv = [&](const Matrix& zz) {
      const Vec qq = soft_assign(zz.data, P, T);
      return sample_loss(MainLoss::Lq, zz.data, P, qq) - sample_loss(MainLoss::LOLS, zz.data, P, qq);
    };
    record("grad_z/v/full", finite_diff_check(fv, zm, as_matrix(grad_z_variance(z, P, T))).max_rel_err, 1e-4);
    // batch objective with all regularizers, full chain through q
    const std::size_t n = 6;
    const Matrix Z = random_matrix(n, d, rng);
    for (MainLoss m : {MainLoss::Lq, MainLoss::LOLS}) {
      ObjectiveSpec spec;
      spec.main = m;
      spec.T = T;
      spec.stop_gradient = false;
      spec.need_dZ = true;
      spec.weights = {0.3, 0.2, 0.05, 0.1, -1};
      const ObjectiveGrad og = objective_grad(Z, P, spec);
      const std::string base = std::string("objective/") + main_loss_name(m);
      record(base + "/dP", finite_diff_check([&](const Matrix& Pp) { return objective_value(Z, Pp, spec); }, P, og.dP).max_rel_err, 1e-4);
      record(base + "/dZ", finite_diff_check([&](const Matrix& Zz) { return objective_value(Zz, P, spec); }, Z, og.dZ).max_rel_err, 1e-4);
    }
  }
  std::vector<GradcheckRow> out;
  for (auto& [name, r] : rows) out.push_back(r);
  return out;
}

}  // namespace ddcl
