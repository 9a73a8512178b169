#pragma once

#include <cstdint>
#include <vector>

#include "ddcl/backbone.hpp"
#include "ddcl/matrix.hpp"

namespace ddcl {

struct KmeansResult {
  Matrix centroids;  // d x k, same layout as prototypes
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
  int n_init = 0;
  std::vector<double> inertia_history;  // per Lloyd iteration of the winning init
};

// Best of n_init k-means++ seeded Lloyd runs. Empty clusters take the point
// farthest from its current centroid.
KmeansResult kmeans(const Matrix& Z, std::size_t k, int n_init = 20, int max_iter = 300, std::uint64_t seed = 0,
                    double tol = 1e-10);

// Single pass over `order` in batches of B with per-center counts as step sizes.
// Centers start at k distinct samples of the first batch.
KmeansResult minibatch_kmeans(const Matrix& Z, const std::vector<std::size_t>& order, std::size_t k, std::size_t B,
                              std::uint64_t seed);

struct PcaOptions {
  std::size_t n_components = 2;
  bool whiten = false;
  bool standardize = false;  // per-feature z-score after projection
  bool l2_normalize = false; // row-wise, applied last
};

struct PcaRecord {
  Vec mean;               // d
  Matrix components;      // d x m, orthonormal columns
  Vec explained_variance; // m, population (1/n) variance
  Vec explained_ratio;    // m
};

// Centered projection onto the top principal directions. Each direction is
// signed so its largest-magnitude entry is positive.
Matrix pca_standardize(const Matrix& Z, const PcaOptions& opt, PcaRecord* record = nullptr);

struct DeepClusterConfig {
  std::size_t k = 10;
  int rounds = 1;
  int n_init = 20;
  std::size_t pca_dim = 256;  // capped at min(n - 1, d)
  int head_epochs = 1;
  double lr = 0.05;
  std::size_t batch = 256;
  std::uint64_t seed = 0;
};

struct DeepClusterRound {
  int round = 0;
  double inertia = 0.0;
  double ce = 0.0;
  double acc = -1, nmi = -1, ari = -1;  // -1 without labels
};

struct DeepClusterResult {
  std::vector<int> labels;
  std::vector<DeepClusterRound> trace;
};

// Preprocess (PCA, whiten, l2) then k-means; the shared first stage of both variants.
std::vector<int> deepcluster_pseudo_labels(const Matrix& F, const DeepClusterConfig& cfg, std::uint64_t seed,
                                           double* inertia = nullptr);

// Frozen features: pseudo-labels plus a linear head trained with
// inverse-frequency weighted cross-entropy.
DeepClusterResult deepcluster_lite(const Matrix& Z, const std::vector<int>* y, const DeepClusterConfig& cfg);

// End-to-end: the backbone is trained on the pseudo-labels through the head.
// One round = cluster eval-mode features, re-init head, head_epochs of SGD.
DeepClusterResult deepcluster_lite_e2e(const Matrix& X, MlpParams& backbone, const std::vector<int>* y,
                                       const DeepClusterConfig& cfg);

}  // namespace ddcl
