#include "ddcl/dcl.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "ddcl/errors.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"

namespace ddcl {

const char* prototype_mode_name(PrototypeMode m) { return m == PrototypeMode::Direct ? "direct" : "dual"; }

PrototypeMode parse_prototype_mode(const std::string& s) {
  if (s == "direct") return PrototypeMode::Direct;
  if (s == "dual") return PrototypeMode::Dual;
  throw ConfigError("unknown prototype mode '" + s + "' (expected direct or dual)");
}

Matrix dcl_forward(const Matrix& X, const Matrix& W2) {
  if (X.rows != W2.rows)
    throw std::invalid_argument("dcl_forward: X has " + std::to_string(X.rows) + " rows, W2 has " + std::to_string(W2.rows));
  return matmul_tn(X, W2);
}

DclGrads dcl_backward(const Matrix& X, const Matrix& W2, const Matrix& grad_P) {
  if (X.rows != W2.rows || grad_P.rows != X.cols || grad_P.cols != W2.cols)
    throw std::invalid_argument("dcl_backward: shape mismatch");
  DclGrads g;
  g.w2 = matmul(X, grad_P);
  g.x = matmul_nt(W2, grad_P);
  return g;
}

double vcl_quantization(const Matrix& X, const Matrix& W1) {
  if (X.cols != W1.cols) throw std::invalid_argument("vcl_quantization: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < W1.rows; ++j) best = std::min(best, kernels::sqdist(X.row_ptr(i), W1.row_ptr(j), X.cols));
    s += best;
  }
  return s;
}

Matrix chl_adjacency(const Matrix& X, const Matrix& P) {
  const std::size_t k = P.cols;
  if (k < 2) throw std::invalid_argument("chl_adjacency: need k >= 2");
  Matrix E(k, k);
  if (X.rows == 0) return E;
  const Matrix D = pairwise_sq_dists(X, P);
  for (std::size_t i = 0; i < D.rows; ++i) {
    std::size_t a = 0, b = 1;
    if (D(i, b) < D(i, a)) std::swap(a, b);
    for (std::size_t j = 2; j < k; ++j) {
      if (D(i, j) < D(i, a)) {
        b = a;
        a = j;
      } else if (D(i, j) < D(i, b)) {
        b = j;
      }
    }
    E(a, b) = E(b, a) = 1.0;
  }
  return E;
}

}  // namespace ddcl
