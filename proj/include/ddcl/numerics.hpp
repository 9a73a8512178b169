#pragma once

#include <span>
#include <string_view>

#include "ddcl/matrix.hpp"

namespace ddcl {

// Z is n x d (samples as rows), P is d x k (prototypes as columns).
// Returns n x k with entry (n, j) = |z_n - p_j|^2.
Matrix pairwise_sq_dists(const Matrix& Z, const Matrix& P);

double frobenius_norm(const Matrix& M);
double frobenius_sq(const Matrix& M);

// Throws DegenerateInput for length < 3 or a constant series.
double pearson_corr(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);

Matrix transpose(const Matrix& A);
Matrix matmul(const Matrix& A, const Matrix& B);     // A B
Matrix matmul_tn(const Matrix& A, const Matrix& B);  // A^T B
Matrix matmul_nt(const Matrix& A, const Matrix& B);  // A B^T
Vec matvec(const Matrix& A, std::span<const double> x);
Vec matvec_t(const Matrix& A, std::span<const double> x);  // A^T x

Matrix add(const Matrix& A, const Matrix& B);
Matrix sub(const Matrix& A, const Matrix& B);
Matrix scale(const Matrix& A, double c);
void axpy(double alpha, const Matrix& X, Matrix& Y);
double max_abs_diff(const Matrix& A, const Matrix& B);

Vec col_means(const Matrix& Z);
Vec col_stds(const Matrix& Z);  // population std
// Per-feature zero mean, unit variance. Constant columns are left centered.
Matrix standardize(const Matrix& Z);

struct SymEig {
  Vec values;     // descending
  Matrix vectors; // columns, matching values
};

// Cyclic Jacobi for symmetric matrices.
SymEig sym_eig(const Matrix& A, double tol = 1e-14, int max_sweeps = 100);
// Largest eigenvalue of a symmetric PSD matrix via power iteration.
double sym_lambda_max(const Matrix& A, int iters = 500, double tol = 1e-12);

void check_finite(const Matrix& M, std::string_view what);

}  // namespace ddcl
