#pragma once

#include <string>

#include "ddcl/matrix.hpp"

namespace ddcl {

struct LossWeights {
  double beta = 0.0;    // balance
  double gamma = 0.0;   // entropy
  double eta = 0.0;     // explicit separation
  double lambda = 0.0;  // quadratic on P
  int entropy_sign = -1;  // -1 rewards entropy, +1 penalizes it
};

void validate(const LossWeights& w);

struct LossBreakdown {
  double l_q = 0, l_ols = 0, v = 0;
  double l_bal = 0, l_ent = 0, l_sep = 0, l_quad = 0;
  double total = 0;
};

struct Regularizers {
  double l_bal = 0, l_ent = 0, l_sep = 0;
};

// Z: n x d, P: d x k, Q: n x k (rows on the simplex). Means over samples.
double quantization_loss(const Matrix& Z, const Matrix& P, const Matrix& Q);
double ols_loss(const Matrix& Z, const Matrix& P, const Matrix& Q);
double variance_term(const Matrix& P, const Matrix& Q);
Regularizers regularizers(const Matrix& P, const Matrix& Q);
// -sum_{i<j} |p_i - p_j|^2
double separation_loss(const Matrix& P);
LossBreakdown total_loss(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w);

// Mean pairwise squared distance between prototypes.
double separation(const Matrix& P);

struct EnergyValue {
  double value = 0.0;
  bool coercive = true;
  std::string warning;
};

// Un-normalized quantization sum plus the regularizers and (lambda/2)|P|^2.
EnergyValue energy(const Matrix& Z, const Matrix& P, const Matrix& Q, const LossWeights& w);
// lambda > 2 eta C(k,2)
bool coercive(const LossWeights& w, std::size_t k);

// -(1/N) sum_n sum_j q_nj log softmax(logits)_nj
double soft_cross_entropy(const Matrix& logits, const Matrix& Qtarget);

}  // namespace ddcl
