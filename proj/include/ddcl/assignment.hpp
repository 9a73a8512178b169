#pragma once

#include <cstddef>
#include <span>

#include "ddcl/matrix.hpp"

namespace ddcl {

// q_j proportional to exp(-|z - p_j|^2 / T), shifted by the minimum distance.
Vec soft_assign(std::span<const double> z, const Matrix& P, double T);

// Row-wise softmax of -D / T for an n x k distance matrix.
Matrix soft_assign_from_dists(const Matrix& D, double T);
Matrix soft_assign_batch(const Matrix& Z, const Matrix& P, double T);

// argmin_j |z - p_j|^2, lowest index on ties. Zero-based.
std::size_t hard_assign(std::span<const double> z, const Matrix& P);
std::vector<int> hard_assign_batch(const Matrix& Z, const Matrix& P);
// argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& Q);

// diag(q) - q q^T
Matrix sigma(std::span<const double> q);
// |q|^2
double concentration(std::span<const double> q);
// tr(sigma(q)) = 1 - |q|^2
double separation_force_trace(std::span<const double> q);

}  // namespace ddcl
