#pragma once

#include <span>
#include <vector>

#include "ddcl/matrix.hpp"

namespace ddcl {

struct ContingencyTable {
  std::vector<int> true_labels;  // distinct values, sorted
  std::vector<int> pred_labels;
  std::vector<std::vector<long>> counts;  // [true][pred]
  std::vector<long> row_sums, col_sums;
  long n = 0;
};

ContingencyTable contingency(std::span<const int> y_true, std::span<const int> y_pred);

// Minimum-cost perfect assignment on a square cost matrix (augmenting paths,
// O(n^3)). Returns column assigned to each row.
std::vector<int> hungarian_min(const std::vector<std::vector<double>>& cost);

double clustering_accuracy(std::span<const int> y_true, std::span<const int> y_pred);
double nmi(std::span<const int> y_true, std::span<const int> y_pred);
double ari(std::span<const int> y_true, std::span<const int> y_pred);

struct ClusterScores {
  double acc = 0, nmi = 0, ari = 0;
};

ClusterScores score_all(std::span<const int> y_true, std::span<const int> y_pred);

}  // namespace ddcl
