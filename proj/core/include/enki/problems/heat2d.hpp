#pragma once

#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "enki/types.hpp"

namespace enki {

/// Interior lattice of the unit square: s points per side, spacing
/// h = 1/(s+1), n = s^2 unknowns, homogeneous Dirichlet boundary.
struct Grid2D {
  Eigen::Index s = 24;

  double spacing() const { return 1.0 / static_cast<double>(s + 1); }
  Eigen::Index size() const { return s * s; }
  Eigen::Index index(Eigen::Index i, Eigen::Index j) const { return i * s + j; }
  void validate() const;
};

enum class FaceAverage { arithmetic, harmonic };

/// SPD 5-point system for div(e^u grad p) = f with face conductivities
/// averaged from the nodal e^u values (boundary faces use the interior
/// node's value).
Eigen::SparseMatrix<double> heat2d_system(const Grid2D& grid, const Vector& u,
                                          FaceAverage face = FaceAverage::arithmetic);

/// Temperature field on the interior nodes; solved by sparse Cholesky with
/// a 1e-10 relative-residual check.
Vector heat2d_solve(const Grid2D& grid, const Vector& u, double f = 1.0,
                    FaceAverage face = FaceAverage::arithmetic);

Vector heat2d_forward(const Grid2D& grid, const Vector& u,
                      const std::vector<Eigen::Index>& obs_indices,
                      double f = 1.0,
                      FaceAverage face = FaceAverage::arithmetic);

ForwardOperator heat2d_operator(Grid2D grid,
                                std::vector<Eigen::Index> obs_indices,
                                double f = 1.0,
                                FaceAverage face = FaceAverage::arithmetic);

/// Smoothness prior with covariance (discrete Laplacian)^{-2}: samples are
/// produced by one Poisson solve of white noise, so cov = L^{-1} L^{-T}
/// = L^{-2} for the symmetric L.
class LaplaceSquaredPrior {
 public:
  explicit LaplaceSquaredPrior(const Grid2D& grid);
  ~LaplaceSquaredPrior();
  LaplaceSquaredPrior(LaplaceSquaredPrior&&) noexcept;

  Vector sample(RngStream& rng) const;
  /// Dense L^{-2}; intended for small grids (tests, dense measures).
  Matrix dense_covariance() const;
  /// Measure with a dense L^{-1} factor.
  GaussianMeasure measure() const;
  const Grid2D& grid() const { return grid_; }

 private:
  struct Impl;
  Grid2D grid_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace enki
