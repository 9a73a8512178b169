#pragma once

#include <span>

#include "ddcl/matrix.hpp"

namespace ddcl {

// Euclidean projection onto the probability simplex (sort-and-threshold).
// Ties in the sort are broken by original index; entries below 1e-15 are
// snapped to 0. Throws std::invalid_argument on non-finite input or k < 1.
Vec project_simplex(std::span<const double> v);

// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> q);

// KL(q || uniform) = log k - H(q).
double kl_to_uniform(std::span<const double> q);

// True when all entries are >= -tol and the sum is within tol of 1.
bool on_simplex(std::span<const double> q, double tol = 1e-9);

inline constexpr double kLogClamp = 1e-30;

}  // namespace ddcl
