#include "ddcl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ddcl/errors.hpp"
#include "ddcl/rng.hpp"

namespace ddcl {

int LabeledDataset::num_classes() const {
  return static_cast<int>(std::set<int>(y.begin(), y.end()).size());
}

namespace {

double linspace(double a, double b, std::size_t i, std::size_t m, bool endpoint) {
  if (m <= 1) return a;
  const double den = endpoint ? static_cast<double>(m - 1) : static_cast<double>(m);
  return a + (b - a) * static_cast<double>(i) / den;
}

void add_noise(Matrix& X, double sd, Rng& rng) {
  if (sd <= 0.0) return;
  for (double& v : X.data) v += sd * rng.normal();
}

}  // namespace

LabeledDataset make_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_moons: n must be >= 2");
  Rng rng(seed);
  const std::size_t a = n / 2, b = n - a;
  LabeledDataset ds;
  ds.name = "moons";
  ds.X = Matrix(n, 2);
  ds.y.resize(n);
  for (std::size_t i = 0; i < a; ++i) {
    const double t = linspace(0.0, std::numbers::pi, i, a, true);
    ds.X(i, 0) = std::cos(t);
    ds.X(i, 1) = std::sin(t);
    ds.y[i] = 0;
  }
  for (std::size_t i = 0; i < b; ++i) {
    const double t = linspace(0.0, std::numbers::pi, i, b, true);
    ds.X(a + i, 0) = 1.0 - std::cos(t);
    ds.X(a + i, 1) = 0.5 - std::sin(t);
    ds.y[a + i] = 1;
  }
  add_noise(ds.X, noise_sd, rng);
  ds.params = {{"n", double(n)}, {"noise", noise_sd}, {"seed", double(seed)}};
  return ds;
}

LabeledDataset make_circles(std::size_t n, double noise_sd, double radius_ratio, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_circles: n must be >= 2");
  if (!(radius_ratio > 0.0 && radius_ratio < 1.0)) throw std::invalid_argument("make_circles: radius_ratio must lie in (0, 1)");
  Rng rng(seed);
  const std::size_t a = n / 2, b = n - a;
  LabeledDataset ds;
  ds.name = "circles";
  ds.X = Matrix(n, 2);
  ds.y.resize(n);
  for (std::size_t i = 0; i < a; ++i) {
    const double t = linspace(0.0, 2.0 * std::numbers::pi, i, a, false);
    ds.X(i, 0) = std::cos(t);
    ds.X(i, 1) = std::sin(t);
    ds.y[i] = 0;
  }
  for (std::size_t i = 0; i < b; ++i) {
    const double t = linspace(0.0, 2.0 * std::numbers::pi, i, b, false);
    ds.X(a + i, 0) = radius_ratio * std::cos(t);
    ds.X(a + i, 1) = radius_ratio * std::sin(t);
    ds.y[a + i] = 1;
  }
  add_noise(ds.X, noise_sd, rng);
  ds.params = {{"n", double(n)}, {"noise", noise_sd}, {"radius_ratio", radius_ratio}, {"seed", double(seed)}};
  return ds;
}

LabeledDataset make_spiral(std::size_t n, double turns, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_spiral: n must be >= 2");
  if (!(turns > 0.0)) throw std::invalid_argument("make_spiral: turns must be positive");
  Rng rng(seed);
  const std::size_t a = n / 2, b = n - a;
  LabeledDataset ds;
  ds.name = "spiral";
  ds.X = Matrix(n, 2);
  ds.y.resize(n);
  std::size_t row = 0;
  for (int arm = 0; arm < 2; ++arm) {
    const std::size_t m = arm == 0 ? a : b;
    for (std::size_t i = 0; i < m; ++i, ++row) {
      const double t = static_cast<double>(i + 1) / static_cast<double>(m);  // radius in (0, 1]
      const double theta = 2.0 * std::numbers::pi * turns * t + arm * std::numbers::pi;
      ds.X(row, 0) = t * std::cos(theta);
      ds.X(row, 1) = t * std::sin(theta);
      ds.y[row] = arm;
    }
  }
  add_noise(ds.X, noise_sd, rng);
  ds.params = {{"n", double(n)}, {"turns", turns}, {"noise", noise_sd}, {"seed", double(seed)}};
  return ds;
}

LabeledDataset make_blobs(std::size_t n, std::size_t k, double centers_box, double cluster_sd, std::uint64_t seed,
                          double min_separation, std::size_t dim) {
  if (k == 0 || n < k) throw std::invalid_argument("make_blobs: need n >= k >= 1");
  Rng rng(seed);
  Matrix C(k, dim);
  const int max_tries = 10000;
  for (std::size_t c = 0; c < k; ++c) {
    int tries = 0;
    for (;;) {
      for (std::size_t j = 0; j < dim; ++j) C(c, j) = rng.uniform(-centers_box, centers_box);
      bool ok = true;
      for (std::size_t o = 0; o < c && ok; ++o) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += (C(c, j) - C(o, j)) * (C(c, j) - C(o, j));
        ok = std::sqrt(s) >= min_separation;
      }
      if (ok) break;
      if (++tries > max_tries) throw ConfigError("make_blobs: cannot place centers with the requested separation");
    }
  }
  LabeledDataset ds;
  ds.name = "blobs";
  ds.X = Matrix(n, dim);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    ds.y[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < dim; ++j) ds.X(i, j) = C(c, j) + cluster_sd * rng.normal();
  }
  ds.params = {{"n", double(n)}, {"k", double(k)}, {"box", centers_box}, {"sd", cluster_sd}, {"min_sep", min_separation},
               {"seed", double(seed)}};
  return ds;
}

LabeledDataset make_madelon_style(std::size_t n, std::size_t d, std::size_t d_informative, double separation,
                                  std::uint64_t seed) {
  if (d_informative > d) throw std::invalid_argument("make_madelon_style: d_informative > d");
  if (n < 2) throw std::invalid_argument("make_madelon_style: n must be >= 2");
  Rng rng(seed);
  LabeledDataset ds;
  ds.name = "madelon";
  ds.X = Matrix(n, d);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = static_cast<int>(i % 2);
    const double shift = (ds.y[i] - 0.5) * separation;
    for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = rng.normal() + (j < d_informative ? shift : 0.0);
  }
  ds.params = {{"n", double(n)}, {"d", double(d)}, {"d_informative", double(d_informative)}, {"separation", separation},
               {"seed", double(seed)}};
  return ds;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, std::optional<int> label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    std::vector<double> vals(cells.size());
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_double(cells[c], vals[c])) {
        numeric = false;
        bad = c;
        break;
      }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw DataError("load_csv: " + path + ": non-numeric cell at row " + std::to_string(lineno) + ", column " +
                      std::to_string(bad + 1) + " ('" + trim(cells[bad]) + "')");
    }
    first = false;
    if (rows.empty()) width = vals.size();
    else if (vals.size() != width)
      throw DataError("load_csv: " + path + ": row " + std::to_string(lineno) + " has " + std::to_string(vals.size()) +
                      " cells, expected " + std::to_string(width));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError("load_csv: " + path + ": no data rows");
  LabeledDataset ds;
  ds.name = path;
  int lc = -2;
  if (label_column) {
    lc = *label_column < 0 ? static_cast<int>(width) + *label_column : *label_column;
    if (lc < 0 || lc >= static_cast<int>(width)) throw DataError("load_csv: label column out of range");
  }
  const std::size_t d = width - (label_column ? 1 : 0);
  ds.X = Matrix(rows.size(), d);
  if (label_column) ds.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (static_cast<int>(j) == lc) {
        const double v = rows[i][j];
        if (v != std::floor(v)) throw DataError("load_csv: non-integer label at data row " + std::to_string(i + 1));
        ds.y[i] = static_cast<int>(v);
      } else {
        if (!std::isfinite(rows[i][j]))
          throw DataError("load_csv: non-finite value at data row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1));
        ds.X(i, c++) = rows[i][j];
      }
    }
  }
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_csv: cannot write '" + path + "'");
  char buf[40];
  for (std::size_t i = 0; i < ds.X.rows; ++i) {
    for (std::size_t j = 0; j < ds.X.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.X(i, j));
      if (j) out << ',';
      out << buf;
    }
    if (ds.has_labels()) out << ',' << ds.y[i];
    out << '\n';
  }
}

}  // namespace ddcl
