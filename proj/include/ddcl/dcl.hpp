#pragma once

#include <string>

#include "ddcl/matrix.hpp"

namespace ddcl {

enum class PrototypeMode { Direct, Dual };

const char* prototype_mode_name(PrototypeMode m);
PrototypeMode parse_prototype_mode(const std::string& s);

// P = X^T W2. X: n x d, W2: n x k, P: d x k.
Matrix dcl_forward(const Matrix& X, const Matrix& W2);

struct DclGrads {
  Matrix w2;  // n x k, X grad_P
  Matrix x;   // n x d, W2 grad_P^T
};

DclGrads dcl_backward(const Matrix& X, const Matrix& W2, const Matrix& grad_P);

// Sum over samples of the nearest-prototype squared distance. W1 is k x d.
double vcl_quantization(const Matrix& X, const Matrix& W1);

// 0/1 symmetric k x k: E_ij = 1 iff some sample has winners {i, j} as its
// first and second nearest prototypes.
Matrix chl_adjacency(const Matrix& X, const Matrix& P);

}  // namespace ddcl
