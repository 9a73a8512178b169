#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

#include "ddcl/datasets.hpp"
#include "ddcl/dcl.hpp"
#include "ddcl/reduced_flow.hpp"
#include "ddcl/report.hpp"

namespace ddcl {

struct ExperimentOptions {
  std::string out_dir;       // empty: no files written
  int seeds = 0;             // 0: block default
  std::uint64_t seed = 0;    // first seed
  unsigned threads = 0;      // 0: DDCL_THREADS or hardware concurrency
  std::string data_path;     // digits CSV for blocks 2, 5, 6
  bool blobs_fallback = false;  // block 6 without digits
  nlohmann::json config;     // RunConfig overrides for the DDCL runs
  std::optional<int> entropy_sign;
  std::optional<PrototypeMode> proto_mode;
  std::optional<bool> stop_gradient;
  int epochs = 0;            // 0: block default
  bool verbose = false;
};

// Worker count after applying DDCL_THREADS; at least 1.
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
// rethrown after all workers finish (lowest index first).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// Digits-format CSV (64 features + label). Throws DataError with fetch hints.
LabeledDataset load_digits(const std::string& path);

// PCA to m components then per-feature z-score.
Matrix pca_features(const Matrix& X, std::size_t m);

ExperimentSummary run_block1(const ExperimentOptions& opt);
ExperimentSummary run_block2(const ExperimentOptions& opt);
ExperimentSummary run_block3(const ExperimentOptions& opt);
ExperimentSummary run_block5(const ExperimentOptions& opt);
ExperimentSummary run_block6(const ExperimentOptions& opt);

struct FlowRun {
  Matrix Z;  // standardized frozen features
  FlowState init, final_state;
  FlowCertificate cert;
};

// Reduced flow on Blobs (n = 400, k = 4). P starts at k distinct samples and
// Q at the soft assignment with T = 1.
FlowRun run_blobs_flow(std::uint64_t seed, const LossWeights& w, const FlowOptions& opt);

struct GradcheckRow {
  std::string name;
  int instances = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
};

// Finite-difference checks of every analytic gradient over random instances.
std::vector<GradcheckRow> gradcheck_suite(int instances, std::uint64_t seed, std::size_t d, std::size_t k, double T);

}  // namespace ddcl
