#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddcl/matrix.hpp"

namespace ddcl {

struct LabeledDataset {
  Matrix X;             // n x d
  std::vector<int> y;   // empty when unlabeled
  std::string name;
  std::map<std::string, double> params;

  bool has_labels() const { return !y.empty(); }
  std::size_t n() const { return X.rows; }
  std::size_t d() const { return X.cols; }
  int num_classes() const;
};

LabeledDataset make_moons(std::size_t n, double noise_sd, std::uint64_t seed);
LabeledDataset make_circles(std::size_t n, double noise_sd, double radius_ratio, std::uint64_t seed);
// Two-arm Archimedean spiral, one arm per class.
LabeledDataset make_spiral(std::size_t n, double turns = 2.0, double noise_sd = 0.05, std::uint64_t seed = 0);
// Isotropic clusters with centers uniform in [-box, box]^dim, redrawn until
// every pair is at least min_separation apart (0 disables the check).
LabeledDataset make_blobs(std::size_t n, std::size_t k, double centers_box, double cluster_sd, std::uint64_t seed,
                          double min_separation = 0.0, std::size_t dim = 2);
// Two classes; the first d_informative coordinates carry class means -sep/2 and
// +sep/2, all other coordinates are standard normal noise.
LabeledDataset make_madelon_style(std::size_t n, std::size_t d, std::size_t d_informative, double separation,
                                  std::uint64_t seed);

// label_column: index of the label column, -1 for the last one, nullopt for
// none. A first row with any non-numeric cell is treated as a header.
LabeledDataset load_csv(const std::string& path, std::optional<int> label_column = std::nullopt);
void save_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace ddcl
