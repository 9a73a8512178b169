#include "ddcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ddcl {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b, const char* who) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": label vectors differ in length");
}

std::vector<int> distinct(std::span<const int> y) {
  std::vector<int> v(y.begin(), y.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

int index_of(const std::vector<int>& sorted, int x) {
  return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

double entropy_of(const std::vector<long>& counts, long n) {
  double h = 0.0;
  for (long c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / static_cast<double>(n);
      h -= p * std::log(p);
    }
  return h;
}

// Same grouping up to relabeling.
bool same_partition(const ContingencyTable& t) {
  if (t.true_labels.size() != t.pred_labels.size()) return false;
  for (const auto& row : t.counts) {
    int nz = 0;
    for (long c : row) nz += c > 0;
    if (nz != 1) return false;
  }
  return true;
}

}  // namespace

ContingencyTable contingency(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true, y_pred, "contingency");
  ContingencyTable t;
  t.true_labels = distinct(y_true);
  t.pred_labels = distinct(y_pred);
  t.counts.assign(t.true_labels.size(), std::vector<long>(t.pred_labels.size(), 0));
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++t.counts[index_of(t.true_labels, y_true[i])][index_of(t.pred_labels, y_pred[i])];
  t.row_sums.assign(t.true_labels.size(), 0);
  t.col_sums.assign(t.pred_labels.size(), 0);
  for (std::size_t r = 0; r < t.counts.size(); ++r)
    for (std::size_t c = 0; c < t.counts[r].size(); ++c) {
      t.row_sums[r] += t.counts[r][c];
      t.col_sums[c] += t.counts[r][c];
    }
  t.n = static_cast<long>(y_true.size());
  return t;
}

std::vector<int> hungarian_min(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return {};
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != n) throw std::invalid_argument("hungarian_min: cost matrix must be square");
  const double INF = std::numeric_limits<double>::infinity();
  // potentials, 1-based with a virtual column 0
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, INF);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = INF;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> ans(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) ans[p[j] - 1] = j - 1;
  return ans;
}

double clustering_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true, y_pred, "clustering_accuracy");
  if (y_true.empty()) return 0.0;
  const ContingencyTable t = contingency(y_true, y_pred);
  if (t.true_labels.size() > 64 || t.pred_labels.size() > 64)
    throw std::invalid_argument("clustering_accuracy: more than 64 distinct labels");
  const std::size_t m = std::max(t.true_labels.size(), t.pred_labels.size());
  std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
  for (std::size_t r = 0; r < t.counts.size(); ++r)
    for (std::size_t c = 0; c < t.counts[r].size(); ++c) cost[r][c] = -static_cast<double>(t.counts[r][c]);
  const std::vector<int> match = hungarian_min(cost);
  long hit = 0;
  for (std::size_t r = 0; r < t.counts.size(); ++r) {
    const int c = match[r];
    if (c >= 0 && static_cast<std::size_t>(c) < t.pred_labels.size()) hit += t.counts[r][c];
  }
  return static_cast<double>(hit) / static_cast<double>(t.n);
}

double nmi(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true, y_pred, "nmi");
  if (y_true.empty()) return 0.0;
  const ContingencyTable t = contingency(y_true, y_pred);
  if (same_partition(t)) return 1.0;
  const double ht = entropy_of(t.row_sums, t.n), hp = entropy_of(t.col_sums, t.n);
  if (ht == 0.0 || hp == 0.0) return 0.0;
  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (std::size_t r = 0; r < t.counts.size(); ++r)
    for (std::size_t c = 0; c < t.counts[r].size(); ++c) {
      const double nij = static_cast<double>(t.counts[r][c]);
      if (nij == 0.0) continue;
      mi += nij / n * std::log(n * nij / (static_cast<double>(t.row_sums[r]) * static_cast<double>(t.col_sums[c])));
    }
  return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

double ari(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true, y_pred, "ari");
  if (y_true.empty()) return 0.0;
  const ContingencyTable t = contingency(y_true, y_pred);
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : t.counts)
    for (long c : row) sum_ij += comb2(static_cast<double>(c));
  for (long a : t.row_sums) sum_a += comb2(static_cast<double>(a));
  for (long b : t.col_sums) sum_b += comb2(static_cast<double>(b));
  const double total = comb2(static_cast<double>(t.n));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return same_partition(t) ? 1.0 : 0.0;
  return (sum_ij - expected) / denom;
}

ClusterScores score_all(std::span<const int> y_true, std::span<const int> y_pred) {
  return {clustering_accuracy(y_true, y_pred), nmi(y_true, y_pred), ari(y_true, y_pred)};
}

}  // namespace ddcl
