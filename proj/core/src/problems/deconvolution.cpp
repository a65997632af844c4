#include "enki/problems/deconvolution.hpp"

#include <cmath>

#include "enki/error.hpp"

namespace enki {

Vector Grid1D::points() const {
  validate();
  return Vector::LinSpaced(n, lo, hi);
}

void Grid1D::validate() const {
  if (n < 2) throw Error("Grid1D: need at least two points");
  if (hi <= lo) throw Error("Grid1D: hi must exceed lo");
}

double deconv_normalization(double a) {
  if (a <= 0.0) throw Error("deconv_normalization: a must be positive");
  return 15.0 / (16.0 * std::pow(a, 5));
}

double deconv_kernel(double x, double a) {
  if (std::abs(x) > a) return 0.0;
  const double p = (x + a) * (x - a);
  return deconv_normalization(a) * p * p;
}

Matrix deconv_operator(const Grid1D& grid, double a) {
  const Vector x = grid.points();
  const double dx = grid.spacing();
  const auto band = static_cast<Eigen::Index>(std::floor(a / dx));
  Matrix op = Matrix::Zero(grid.n, grid.n);
  for (Eigen::Index i = 0; i < grid.n; ++i) {
    const Eigen::Index j_lo = std::max<Eigen::Index>(0, i - band);
    const Eigen::Index j_hi = std::min<Eigen::Index>(grid.n - 1, i + band);
    for (Eigen::Index j = j_lo; j <= j_hi; ++j)
      op(i, j) = dx * deconv_kernel(x[i] - x[j], a);
  }
  return op;
}

Matrix exp_sine_squared_cov(const Vector& points, double length_scale,
                            double periodicity, double variance) {
  if (length_scale <= 0.0 || periodicity <= 0.0)
    throw Error("exp_sine_squared_cov: length scale and periodicity must be positive");
  const Eigen::Index n = points.size();
  const double inv_l2 = 1.0 / (length_scale * length_scale);
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double s =
          std::sin(3.14159265358979323846 * std::abs(points[i] - points[j]) /
                   periodicity);
      const double value = variance * std::exp(-2.0 * s * s * inv_l2);
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

}  // namespace enki
