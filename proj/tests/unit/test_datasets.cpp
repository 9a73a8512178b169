#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "ddcl/datasets.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/numerics.hpp"

using namespace ddcl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ddcl_test_" + name)).string();
}

}  // namespace

TEST_CASE("noise-free moons lie on two unit half circles") {
  const LabeledDataset ds = make_moons(100, 0.0, 1);
  REQUIRE(ds.n() == 100);
  CHECK(ds.num_classes() == 2);
  for (std::size_t i = 0; i < 100; ++i) {
    const double cx = ds.y[i] == 0 ? 0.0 : 1.0, cy = ds.y[i] == 0 ? 0.0 : 0.5;
    CHECK(std::hypot(ds.X(i, 0) - cx, ds.X(i, 1) - cy) == doctest::Approx(1.0));
  }
}

TEST_CASE("noise-free circles have the requested radii") {
  const LabeledDataset ds = make_circles(200, 0.0, 0.5, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    const double r = std::hypot(ds.X(i, 0), ds.X(i, 1));
    CHECK((r == doctest::Approx(1.0) || r == doctest::Approx(0.5)));
  }
  CHECK(ds.num_classes() == 2);
  CHECK_THROWS(make_circles(10, 0.0, 1.5, 0));
}

TEST_CASE("spiral, blobs and MADELON-style shapes") {
  const LabeledDataset sp = make_spiral(300, 2.0, 0.05, 3);
  CHECK(sp.n() == 300);
  CHECK(sp.num_classes() == 2);
  const LabeledDataset bl = make_blobs(400, 4, 10.0, 1.0, 4, 8.0);
  CHECK(bl.num_classes() == 4);
  CHECK(bl.d() == 2);
  const LabeledDataset md = make_madelon_style(100, 50, 5, 4.0, 5);
  CHECK(md.d() == 50);
  CHECK(md.num_classes() == 2);
  double gap = 0.0, noise_gap = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    gap += (md.y[i] ? 1.0 : -1.0) * md.X(i, 0) / 50.0;
    noise_gap += (md.y[i] ? 1.0 : -1.0) * md.X(i, 40) / 50.0;
  }
  CHECK(gap == doctest::Approx(4.0).epsilon(0.15));
  CHECK(std::abs(noise_gap) < 0.8);
  CHECK_THROWS_AS(make_blobs(40, 4, 1.0, 1.0, 0, 100.0), ConfigError);
}

TEST_CASE("generators are deterministic in the seed") {
  CHECK(max_abs_diff(make_moons(50, 0.1, 9).X, make_moons(50, 0.1, 9).X) == 0.0);
  CHECK(max_abs_diff(make_moons(50, 0.1, 9).X, make_moons(50, 0.1, 10).X) > 0.0);
}

TEST_CASE("CSV round trip and malformed input") {
  const LabeledDataset ds = make_blobs(30, 3, 10.0, 1.0, 6);
  const std::string p = temp_path("roundtrip.csv");
  save_csv(ds, p);
  const LabeledDataset back = load_csv(p, -1);
  CHECK(max_abs_diff(ds.X, back.X) == 0.0);
  CHECK(back.y == ds.y);
  const LabeledDataset nolab = load_csv(p);
  CHECK(nolab.d() == 3);
  CHECK_FALSE(nolab.has_labels());

  const std::string bad = temp_path("ragged.csv");
  std::ofstream(bad) << "1,2,3\n4,5\n";
  CHECK_THROWS_AS(load_csv(bad), DataError);
  std::ofstream(bad) << "a,b,label\n1,2,0\n3,4,1\n";
  CHECK(load_csv(bad, -1).n() == 2);
  std::ofstream(bad) << "1,2,0.5\n";
  CHECK_THROWS_AS(load_csv(bad, -1), DataError);
  CHECK_THROWS_AS(load_csv(temp_path("missing.csv")), DataError);
  std::remove(p.c_str());
  std::remove(bad.c_str());
}
