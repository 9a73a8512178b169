#include "ddcl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ddcl/errors.hpp"
#include "ddcl/kernels.hpp"

namespace ddcl {

Matrix::Matrix(std::size_t r, std::size_t c, std::initializer_list<double> values)
    : rows(r), cols(c), data(values) {
  if (data.size() != r * c) throw std::invalid_argument("Matrix: initializer size does not match shape");
}

Vec Matrix::col(std::size_t j) const {
  Vec v(rows);
  for (std::size_t i = 0; i < rows; ++i) v[i] = (*this)(i, j);
  return v;
}

void Matrix::set_col(std::size_t j, std::span<const double> v) {
  for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::identity(std::size_t n) {
  Matrix I(n, n);
  for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return {};
  Matrix M(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != M.cols) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), M.row_ptr(i));
  }
  return M;
}

bool same_shape(const Matrix& a, const Matrix& b) { return a.rows == b.rows && a.cols == b.cols; }

namespace {

std::string shape(const Matrix& M) { return std::to_string(M.rows) + "x" + std::to_string(M.cols); }

}  // namespace

Matrix pairwise_sq_dists(const Matrix& Z, const Matrix& P) {
  if (Z.cols != P.rows)
    throw std::invalid_argument("pairwise_sq_dists: Z is " + shape(Z) + " but P is " + shape(P) +
                                " (need Z.cols == P.rows)");
  const std::size_t n = Z.rows, d = Z.cols, k = P.cols;
  const Matrix Pt = transpose(P);
  Matrix D(n, k);
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = Z.row_ptr(i);
    for (std::size_t j = 0; j < k; ++j) D(i, j) = K.sqdist(z, Pt.row_ptr(j), d);
  }
  return D;
}

double frobenius_sq(const Matrix& M) { return kernels::sqnorm(M.data.data(), M.data.size()); }

double frobenius_norm(const Matrix& M) { return std::sqrt(frobenius_sq(M)); }

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson_corr: series lengths differ");
  if (a.size() < 3) throw DegenerateInput("pearson_corr: need at least 3 points, got " + std::to_string(a.size()));
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("pearson_corr: constant series");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

Matrix transpose(const Matrix& A) {
  Matrix T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: " + shape(A) + " * " + shape(B));
  Matrix C(A.rows, B.cols);
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < A.rows; ++i) {
    double* c = C.row_ptr(i);
    for (std::size_t p = 0; p < A.cols; ++p) {
      const double a = A(i, p);
      if (a != 0.0) K.axpy(a, B.row_ptr(p), c, B.cols);
    }
  }
  return C;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B) {
  if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: " + shape(A) + "^T * " + shape(B));
  Matrix C(A.cols, B.cols);
  const auto& K = kernels::active();
  for (std::size_t p = 0; p < A.rows; ++p) {
    const double* a = A.row_ptr(p);
    const double* b = B.row_ptr(p);
    for (std::size_t i = 0; i < A.cols; ++i)
      if (a[i] != 0.0) K.axpy(a[i], b, C.row_ptr(i), B.cols);
  }
  return C;
}

Matrix matmul_nt(const Matrix& A, const Matrix& B) {
  if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: " + shape(A) + " * " + shape(B) + "^T");
  Matrix C(A.rows, B.rows);
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < B.rows; ++j) C(i, j) = K.dot(A.row_ptr(i), B.row_ptr(j), A.cols);
  return C;
}

Vec matvec(const Matrix& A, std::span<const double> x) {
  if (A.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  Vec y(A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) y[i] = kernels::dot(A.row_ptr(i), x.data(), A.cols);
  return y;
}

Vec matvec_t(const Matrix& A, std::span<const double> x) {
  if (A.rows != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
  Vec y(A.cols, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) kernels::axpy(x[i], A.row_ptr(i), y.data(), A.cols);
  return y;
}

Matrix add(const Matrix& A, const Matrix& B) {
  if (!same_shape(A, B)) throw std::invalid_argument("add: shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
  return C;
}

Matrix sub(const Matrix& A, const Matrix& B) {
  if (!same_shape(A, B)) throw std::invalid_argument("sub: shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] -= B.data[i];
  return C;
}

Matrix scale(const Matrix& A, double c) {
  Matrix C = A;
  for (double& v : C.data) v *= c;
  return C;
}

void axpy(double alpha, const Matrix& X, Matrix& Y) {
  if (!same_shape(X, Y)) throw std::invalid_argument("axpy: shape mismatch");
  kernels::axpy(alpha, X.data.data(), Y.data.data(), X.size());
}

double max_abs_diff(const Matrix& A, const Matrix& B) {
  if (!same_shape(A, B)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) m = std::max(m, std::abs(A.data[i] - B.data[i]));
  return m;
}

Vec col_means(const Matrix& Z) {
  Vec m(Z.cols, 0.0);
  for (std::size_t i = 0; i < Z.rows; ++i)
    for (std::size_t j = 0; j < Z.cols; ++j) m[j] += Z(i, j);
  for (double& v : m) v /= static_cast<double>(std::max<std::size_t>(Z.rows, 1));
  return m;
}

Vec col_stds(const Matrix& Z) {
  const Vec m = col_means(Z);
  Vec s(Z.cols, 0.0);
  for (std::size_t i = 0; i < Z.rows; ++i)
    for (std::size_t j = 0; j < Z.cols; ++j) s[j] += (Z(i, j) - m[j]) * (Z(i, j) - m[j]);
  for (double& v : s) v = std::sqrt(v / static_cast<double>(std::max<std::size_t>(Z.rows, 1)));
  return s;
}

Matrix standardize(const Matrix& Z) {
  const Vec m = col_means(Z), s = col_stds(Z);
  Matrix out = Z;
  for (std::size_t i = 0; i < Z.rows; ++i)
    for (std::size_t j = 0; j < Z.cols; ++j) {
      const double c = Z(i, j) - m[j];
      out(i, j) = s[j] > 1e-12 ? c / s[j] : c;
    }
  return out;
}

SymEig sym_eig(const Matrix& Ain, double tol, int max_sweeps) {
  if (Ain.rows != Ain.cols) throw std::invalid_argument("sym_eig: matrix not square");
  const std::size_t n = Ain.rows;
  Matrix A = Ain;
  Matrix V = Matrix::identity(n);
  double total = std::max(frobenius_sq(A), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off <= tol * tol * total) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = A(r, p), arq = A(r, q);
          A(r, p) = c * arp - s * arq;
          A(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = A(p, r), aqr = A(q, r);
          A(p, r) = c * apr - s * aqr;
          A(q, r) = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = V(r, p), vrq = V(r, q);
          V(r, p) = c * vrp - s * vrq;
          V(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });
  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = A(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = V(r, order[c]);
  }
  return out;
}

double sym_lambda_max(const Matrix& A, int iters, double tol) {
  if (A.rows != A.cols) throw std::invalid_argument("sym_lambda_max: matrix not square");
  const std::size_t n = A.rows;
  if (n == 0) return 0.0;
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    double nv = std::sqrt(kernels::sqnorm(v.data(), n));
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    Vec w = matvec(A, v);
    const double next = kernels::dot(v.data(), w.data(), n);
    v = std::move(w);
    if (std::abs(next - lam) <= tol * std::max(1.0, std::abs(next))) {
      lam = next;
      break;
    }
    lam = next;
  }
  return lam;
}

void check_finite(const Matrix& M, std::string_view what) {
  for (std::size_t i = 0; i < M.size(); ++i)
    if (!std::isfinite(M.data[i]))
      throw NumericalError(std::string(what) + ": non-finite entry at (" + std::to_string(i / std::max<std::size_t>(M.cols, 1)) +
                           ", " + std::to_string(i % std::max<std::size_t>(M.cols, 1)) + ")");
}

}  // namespace ddcl
