#include "enki/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "enki/error.hpp"

namespace enki {

double infinity_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double vector_infinity_norm(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return v.cwiseAbs().maxCoeff();
}

Matrix symmetric_sqrt(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("symmetric_sqrt: matrix not square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success)
    throw Error("symmetric_sqrt: eigendecomposition failed");
  Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = infinity_norm(a);
  if (scale == 0.0) return true;
  return infinity_norm(a - a.transpose()) <= rel_tol * scale;
}

std::pair<double, double> eigenvalue_extremes(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw Error("eigenvalue_extremes: eigendecomposition failed");
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

}  // namespace enki
