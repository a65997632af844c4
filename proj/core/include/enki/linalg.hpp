#pragma once

#include <Eigen/Core>

namespace enki {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Induced infinity norm: maximum absolute row sum.
double infinity_norm(const Matrix& a);

/// Vector infinity norm: maximum absolute entry.
double vector_infinity_norm(const Vector& v);

/// Symmetric principal square root via eigendecomposition; negative
/// eigenvalues (numerical rank deficiency) are clamped to zero.
Matrix symmetric_sqrt(const Matrix& a);

bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

/// Smallest and largest eigenvalues of a symmetric matrix.
std::pair<double, double> eigenvalue_extremes(const Matrix& a);

}  // namespace enki
