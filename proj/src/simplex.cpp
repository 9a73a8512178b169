#include "ddcl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ddcl {

Vec project_simplex(std::span<const double> v) {
  const std::size_t k = v.size();
  if (k == 0) throw std::invalid_argument("project_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite entry");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

  double cum = 0.0, theta = 0.0;
  std::size_t rho = 0;
  double cum_rho = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    cum += v[order[j]];
    if (v[order[j]] - (cum - 1.0) / static_cast<double>(j + 1) > 0.0) {
      rho = j + 1;
      cum_rho = cum;
    }
  }
  theta = (cum_rho - 1.0) / static_cast<double>(rho);

  Vec q(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double x = v[j] - theta;
    q[j] = x > 1e-15 ? x : 0.0;
  }
  return q;
}

double entropy(std::span<const double> q) {
  double h = 0.0;
  for (double x : q)
    if (x > 0.0) h -= x * std::log(std::max(x, kLogClamp));
  return std::max(h, 0.0);
}

double kl_to_uniform(std::span<const double> q) {
  return std::max(std::log(static_cast<double>(q.size())) - entropy(q), 0.0);
}

bool on_simplex(std::span<const double> q, double tol) {
  double s = 0.0;
  for (double x : q) {
    if (!(x >= -tol)) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

}  // namespace ddcl
