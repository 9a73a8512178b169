#include "ddcl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddcl/errors.hpp"
#include "ddcl/numerics.hpp"

namespace ddcl {

const std::vector<std::string>& trace_columns(bool streaming) {
  static const std::vector<std::string> base = {"epoch", "T",      "l_q",          "l_ols", "v",   "s",
                                                "k_mean", "i_mean", "grad_pv_norm", "acc",   "nmi", "ari"};
  static const std::vector<std::string> stream = [] {
    auto v = base;
    v.push_back("samples_seen");
    return v;
  }();
  return streaming ? stream : base;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const TrainTrace& trace, bool streaming) {
  const auto& cols = trace_columns(streaming);
  std::ostringstream os;
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  std::vector<Vec> data;
  for (const auto& c : cols) data.push_back(trace.column(c));
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) os << ',';
      if (cols[c] == "epoch" || cols[c] == "samples_seen") os << static_cast<long long>(data[c][r]);
      else os << fmt_double(data[c][r]);
    }
    os << '\n';
  }
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path + "'");
}

void write_trace_csv(const TrainTrace& trace, const std::string& path, bool streaming) {
  write_text(path, trace_csv(trace, streaming));
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory '" + path + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string validate_trace_csv(const std::string& text, bool streaming) {
  const auto& cols = trace_columns(streaming);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) return "empty file";
  std::string expect;
  for (std::size_t c = 0; c < cols.size(); ++c) expect += (c ? "," : "") + cols[c];
  if (line != expect) return "header mismatch: got '" + line + "'";
  std::size_t row = 1;
  long prev_epoch = -1;
  while (std::getline(is, line)) {
    ++row;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != cols.size())
      return "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
             std::to_string(cols.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const bool metric = cols[c] == "acc" || cols[c] == "nmi" || cols[c] == "ari";
      if (cells[c].empty()) {
        if (metric) continue;
        return "row " + std::to_string(row) + ": empty " + cols[c];
      }
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0' || !std::isfinite(v))
        return "row " + std::to_string(row) + ": bad value in " + cols[c];
      if (cols[c] == "epoch") {
        if (static_cast<long>(v) <= prev_epoch) return "row " + std::to_string(row) + ": epoch not increasing";
        prev_epoch = static_cast<long>(v);
      }
      if (cols[c] == "v" && v < -1e-12) return "row " + std::to_string(row) + ": negative variance term";
      if (cols[c] == "T" && !(v > 0.0)) return "row " + std::to_string(row) + ": non-positive temperature";
    }
  }
  return {};
}

Stats summarize(const std::vector<double>& v) {
  Stats s;
  s.values = v;
  if (v.empty()) return s;
  s.mean = mean(v);
  s.std = v.size() > 1 ? stddev(v) : 0.0;
  return s;
}

const MethodScores& ExperimentSummary::method(const std::string& name) const {
  const auto it = methods.find(name);
  if (it == methods.end()) throw std::out_of_range("summary has no method '" + name + "'");
  return it->second;
}

double ExperimentSummary::check(const std::string& name) const {
  const auto it = checks.find(name);
  if (it == checks.end()) throw std::out_of_range("summary has no check '" + name + "'");
  return it->second;
}

namespace {

nlohmann::json stats_json(const Stats& s) {
  nlohmann::json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["values"] = s.values;
  return j;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const ExperimentSummary& s) {
  nlohmann::json j;
  j["block"] = s.block;
  j["seeds"] = s.seeds;
  for (const auto& [name, m] : s.methods) {
    j["methods"][name]["acc"] = stats_json(m.acc);
    j["methods"][name]["nmi"] = stats_json(m.nmi);
    j["methods"][name]["ari"] = stats_json(m.ari);
  }
  for (const auto& [name, v] : s.checks) j["checks"][name] = finite_or_null(v);
  if (!s.config.is_null()) j["config"] = s.config;
  return j;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["k"] = c.k;
  j["T0"] = c.T0;
  j["T_min"] = c.T_min;
  j["tau"] = c.tau;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["eta"] = c.eta;
  j["eta_ramp_epochs"] = c.eta_ramp_epochs;
  j["lambda"] = c.lambda;
  j["lr_backbone"] = c.lr_backbone;
  j["lr_dcl"] = c.lr_dcl;
  j["momentum"] = c.momentum;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["stop_gradient"] = c.stop_gradient;
  j["loss_kind"] = main_loss_name(c.loss_kind);
  j["prototype_mode"] = prototype_mode_name(c.prototype_mode);
  j["entropy_sign"] = c.entropy_sign;
  j["batch_size"] = c.batch_size;
  j["dual_normalize"] = c.dual_normalize;
  j["lyapunov_check"] = c.lyapunov_check;
  j["stop_gradient_warmup"] = c.stop_gradient_warmup;
  j["backbone_freeze"] = c.backbone_freeze;
  j["record_metrics"] = c.record_metrics;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const nlohmann::json& v = it.value();
    try {
      if (key == "k") c.k = v.get<std::size_t>();
      else if (key == "T0") c.T0 = v.get<double>();
      else if (key == "T_min") c.T_min = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "eta") c.eta = v.get<double>();
      else if (key == "eta_ramp_epochs") c.eta_ramp_epochs = v.get<int>();
      else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "lr_backbone") c.lr_backbone = v.get<double>();
      else if (key == "lr_dcl") c.lr_dcl = v.get<double>();
      else if (key == "momentum") c.momentum = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "stop_gradient") c.stop_gradient = v.get<bool>();
      else if (key == "loss_kind") c.loss_kind = parse_main_loss(v.get<std::string>());
      else if (key == "prototype_mode") c.prototype_mode = parse_prototype_mode(v.get<std::string>());
      else if (key == "entropy_sign") c.entropy_sign = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "dual_normalize") c.dual_normalize = v.get<bool>();
      else if (key == "lyapunov_check") c.lyapunov_check = v.get<bool>();
      else if (key == "stop_gradient_warmup") c.stop_gradient_warmup = v.get<int>();
      else if (key == "backbone_freeze") c.backbone_freeze = v.get<int>();
      else if (key == "record_metrics") c.record_metrics = v.get<bool>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return c;
}

namespace {

std::string esc(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<Series>& series, bool log_x) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double W = 640, H = 400, ml = 70, mr = 160, mt = 40, mb = 50;
  auto fx = [&](double x) { return log_x ? std::log10(x) : x; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0)) continue;
      x0 = std::min(x0, fx(s.x[i]));
      x1 = std::max(x1, fx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto px = [&](double x) { return ml + (fx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y0 + (y1 - y0) * t / 4.0, xv = x0 + (x1 - x0) * t / 4.0;
    const double yy = mt + (1.0 - t / 4.0) * ph, xx = ml + t / 4.0 * pw;
    o << "<text x=\"" << ml - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    o << "<text x=\"" << xx << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << num(log_x ? std::pow(10.0, xv) : xv)
      << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
  o << "<text x=\"15\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << mt + ph / 2 << ")\">"
    << esc(ylabel) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 10];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0)) continue;
      o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = mt + 14 + 16.0 * static_cast<double>(si);
    o << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - mr + 34 << "\" y=\"" << ly << "\">" << esc(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ddcl
