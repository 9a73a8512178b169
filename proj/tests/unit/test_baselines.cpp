#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "ddcl/backbone.hpp"
#include "ddcl/baselines.hpp"
#include "ddcl/datasets.hpp"
#include "ddcl/metrics.hpp"
#include "ddcl/numerics.hpp"

using namespace ddcl;

TEST_CASE("k-means recovers well separated blobs") {
  const LabeledDataset ds = make_blobs(300, 3, 20.0, 0.5, 11, 10.0);
  const KmeansResult r = kmeans(ds.X, 3, 5, 300, 1);
  CHECK(clustering_accuracy(ds.y, r.labels) == 1.0);
  CHECK(r.centroids.rows == 2);
  CHECK(r.centroids.cols == 3);
  for (std::size_t t = 1; t < r.inertia_history.size(); ++t)
    CHECK(r.inertia_history[t] <= r.inertia_history[t - 1] + 1e-9);
  double inertia = 0.0;
  for (std::size_t i = 0; i < 300; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < 2; ++c) s += std::pow(ds.X(i, c) - r.centroids(c, r.labels[i]), 2);
    inertia += s;
  }
  CHECK(r.inertia == doctest::Approx(inertia).epsilon(1e-10));
  const KmeansResult again = kmeans(ds.X, 3, 5, 300, 1);
  CHECK(again.labels == r.labels);
}

TEST_CASE("minibatch k-means runs one pass over the stream") {
  const LabeledDataset ds = make_blobs(300, 3, 20.0, 0.5, 12, 10.0);
  Rng rng(3);
  const auto order = rng.permutation(300);
  const KmeansResult r = minibatch_kmeans(ds.X, order, 3, 30, 4);
  CHECK(r.labels.size() == 300);
  CHECK(clustering_accuracy(ds.y, r.labels) > 0.9);
}

TEST_CASE("PCA components match the covariance eigenvectors") {
  Rng rng(13);
  Matrix X = oracle::random_matrix(200, 5, rng);
  for (std::size_t i = 0; i < 200; ++i) {
    X(i, 0) *= 4.0;
    X(i, 1) = 0.5 * X(i, 0) + X(i, 1);
  }
  PcaRecord rec;
  const Matrix Y = pca_standardize(X, PcaOptions{3, false, false, false}, &rec);
  REQUIRE(Y.rows == 200);
  REQUIRE(Y.cols == 3);
  CHECK(max_abs_diff(matmul_tn(rec.components, rec.components), Matrix::identity(3)) < 1e-10);
  for (std::size_t j = 1; j < 3; ++j) CHECK(rec.explained_variance[j - 1] >= rec.explained_variance[j]);
  const Vec m = col_means(X);
  Matrix C(5, 5);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b) C(a, b) += (X(i, a) - m[a]) * (X(i, b) - m[b]) / 200.0;
  const SymEig e = sym_eig(C);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rec.explained_variance[j] == doctest::Approx(e.values[j]).epsilon(1e-8));
    double dot = 0.0;
    for (std::size_t r = 0; r < 5; ++r) dot += rec.components(r, j) * e.vectors(r, j);
    CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-8));
  }
  const Matrix W = pca_standardize(X, PcaOptions{3, true, false, true});
  for (std::size_t i = 0; i < 200; ++i) CHECK(std::sqrt(frobenius_sq(Matrix(1, 3, {W(i, 0), W(i, 1), W(i, 2)}))) == doctest::Approx(1.0));
  CHECK_THROWS(pca_standardize(X, PcaOptions{6, false, false, false}));
}

TEST_CASE("PCA with more features than samples uses the Gram path") {
  Rng rng(14);
  const Matrix X = oracle::random_matrix(10, 40, rng);
  PcaRecord rec;
  const Matrix Y = pca_standardize(X, PcaOptions{5, false, false, false}, &rec);
  CHECK(max_abs_diff(matmul_tn(rec.components, rec.components), Matrix::identity(5)) < 1e-9);
  const Vec v = col_stds(Y);
  for (std::size_t j = 0; j < 5; ++j)
    CHECK(v[j] * v[j] == doctest::Approx(rec.explained_variance[j]).epsilon(1e-8));
}

TEST_CASE("DeepCluster-lite frozen and end-to-end") {
  const LabeledDataset ds = make_blobs(256, 3, 20.0, 0.5, 15, 10.0);
  DeepClusterConfig cfg;
  cfg.k = 3;
  cfg.rounds = 3;
  cfg.n_init = 3;
  cfg.batch = 64;
  cfg.seed = 2;
  const DeepClusterResult r = deepcluster_lite(standardize(ds.X), &ds.y, cfg);
  CHECK(r.trace.size() == 3);
  CHECK(r.labels.size() == 256);
  CHECK(r.trace.back().acc > 0.9);
  Rng rng(16);
  MlpParams bb = mlp_init(MlpSpec{{2, 16, 8}, true, true}, rng);
  const DeepClusterResult e = deepcluster_lite_e2e(standardize(ds.X), bb, nullptr, cfg);
  CHECK(e.trace.size() == 3);
  CHECK(e.trace.back().acc == -1);
  for (const auto& t : e.trace) CHECK(std::isfinite(t.ce));
}
