#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/metrics.hpp"

using namespace ddcl;

namespace {

std::vector<int> random_labels(std::size_t n, int k, Rng& rng) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(static_cast<std::size_t>(k)));
  return y;
}

}  // namespace

TEST_CASE("ACC equals the factorial brute force") {
  Rng rng(100);
  for (int k = 1; k <= 6; ++k)
    for (int it = 0; it < 30; ++it) {
      const std::size_t n = 5 + rng.below(60);
      const auto y = random_labels(n, k, rng), p = random_labels(n, k, rng);
      CHECK(clustering_accuracy(y, p) == doctest::Approx(oracle::factorial_acc(y, p, k)).epsilon(1e-14));
    }
}

TEST_CASE("ARI and NMI match direct formulas") {
  Rng rng(101);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.below(80);
    const int ka = 1 + static_cast<int>(rng.below(6)), kb = 1 + static_cast<int>(rng.below(6));
    const auto a = random_labels(n, ka, rng), b = random_labels(n, kb, rng);
    CHECK(std::abs(ari(a, b) - oracle::pair_count_ari(a, b)) <= 1e-10);
    CHECK(std::abs(nmi(a, b) - oracle::entropy_nmi(a, b)) <= 1e-10);
  }
}

TEST_CASE("independent labelings have ARI near zero") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(1000 + s);
    const auto a = random_labels(1000, 5, rng), b = random_labels(1000, 5, rng);
    CHECK(std::abs(ari(a, b)) <= 0.05);
  }
}

TEST_CASE("metrics are invariant to relabeling and exact on identical partitions") {
  const std::vector<int> y{0, 0, 1, 1, 2, 2, 2};
  const std::vector<int> p{5, 5, 3, 3, 9, 9, 9};
  const ClusterScores s = score_all(y, p);
  CHECK(s.acc == 1.0);
  CHECK(s.nmi == doctest::Approx(1.0));
  CHECK(s.ari == doctest::Approx(1.0));
  const std::vector<int> q{0, 1, 0, 1, 0, 1, 0};
  CHECK(clustering_accuracy(y, q) == doctest::Approx(oracle::factorial_acc(y, q, 3)));
  CHECK_THROWS(clustering_accuracy(y, std::vector<int>{0, 1}));
}

TEST_CASE("Hungarian solver finds the minimum-cost assignment") {
  const std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const auto a = hungarian_min(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += cost[i][a[i]];
  CHECK(total == doctest::Approx(5.0));
}

TEST_CASE("contingency table counts") {
  const std::vector<int> y{1, 1, 2, 2}, p{0, 1, 1, 1};
  const ContingencyTable t = contingency(y, p);
  CHECK(t.n == 4);
  CHECK(t.true_labels == std::vector<int>{1, 2});
  CHECK(t.counts[0][0] == 1);
  CHECK(t.counts[1][1] == 2);
  CHECK(t.col_sums[1] == 3);
}
