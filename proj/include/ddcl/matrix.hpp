#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ddcl {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::initializer_list<double> values);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
  std::span<double> row(std::size_t i) { return {row_ptr(i), cols}; }
  std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols}; }

  Vec col(std::size_t j) const;
  void set_col(std::size_t j, std::span<const double> v);

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<Vec>& rows);
};

bool same_shape(const Matrix& a, const Matrix& b);

}  // namespace ddcl
