#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddcl/batch_trainer.hpp"

namespace ddcl {

// epoch,T,l_q,l_ols,v,s,k_mean,i_mean,grad_pv_norm,acc,nmi,ari (+ samples_seen)
const std::vector<std::string>& trace_columns(bool streaming = false);

std::string trace_csv(const TrainTrace& trace, bool streaming = false);
void write_trace_csv(const TrainTrace& trace, const std::string& path, bool streaming = false);

// Empty string when the CSV text matches the trace schema, else the first problem.
std::string validate_trace_csv(const std::string& text, bool streaming = false);

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator, 0 for a single value
  std::vector<double> values;
};
Stats summarize(const std::vector<double>& v);

struct MethodScores {
  Stats acc, nmi, ari;
};

struct ExperimentSummary {
  std::string block;
  int seeds = 0;
  std::map<std::string, MethodScores> methods;
  std::map<std::string, double> checks;
  nlohmann::json config;

  const MethodScores& method(const std::string& name) const;
  double check(const std::string& name) const;
};

nlohmann::json to_json(const ExperimentSummary& s);

// Flat JSON object keyed by RunConfig field names.
nlohmann::json config_to_json(const RunConfig& c);
// Applies the keys present in j on top of base; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

struct Series {
  std::string name;
  std::vector<double> x, y;
};

// Line chart; non-finite points are skipped.
std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<Series>& series, bool log_x = false);

void write_text(const std::string& path, const std::string& text);
void ensure_dir(const std::string& path);
std::string join_path(const std::string& dir, const std::string& file);
std::string fmt_double(double v);

}  // namespace ddcl
