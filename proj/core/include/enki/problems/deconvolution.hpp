#pragma once

#include "enki/linalg.hpp"

namespace enki {

/// Uniform grid of n points on [lo, hi], endpoints included.
struct Grid1D {
  Eigen::Index n = 100;
  double lo = -10.0;
  double hi = 10.0;

  Vector points() const;
  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  void validate() const;
};

/// Normalizing constant of the quartic kernel: 15 / (16 a^5), so the kernel
/// integrates to 1 over [-a, a].
double deconv_normalization(double a);

/// C_a (x + a)^2 (x - a)^2 on [-a, a], zero outside.
double deconv_kernel(double x, double a);

/// Discrete convolution operator: row i holds dx * kernel(x_i - x_j) for
/// |x_i - x_j| <= a (zero padding outside the grid). Symmetric banded for a
/// uniform grid.
Matrix deconv_operator(const Grid1D& grid, double a = 0.235);

/// Periodic kernel K_ij = variance * exp(-2 sin^2(pi |x_i - x_j| / periodicity)
/// / length_scale^2).
Matrix exp_sine_squared_cov(const Vector& points, double length_scale = 0.5,
                            double periodicity = 20.0, double variance = 1.0);

}  // namespace enki
