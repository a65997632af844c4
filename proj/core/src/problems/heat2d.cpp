#include "enki/problems/heat2d.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/SparseCholesky>

#include "enki/error.hpp"

namespace enki {
namespace {

double face_value(double a, double b, FaceAverage kind) {
  if (kind == FaceAverage::arithmetic) return 0.5 * (a + b);
  return 2.0 * a * b / (a + b);
}

/// 5-point discrete Laplacian (SPD form, 1/h^2 scaling) with Dirichlet
/// boundary; equals the heat system at u = 0.
Eigen::SparseMatrix<double> laplacian(const Grid2D& grid) {
  return heat2d_system(grid, Vector::Zero(grid.size()));
}

}  // namespace

void Grid2D::validate() const {
  if (s < 2) throw Error("Grid2D: need at least two interior points per side");
}

Eigen::SparseMatrix<double> heat2d_system(const Grid2D& grid, const Vector& u,
                                          FaceAverage face) {
  grid.validate();
  if (u.size() != grid.size()) throw Error("heat2d_system: field dimension mismatch");
  if (!u.allFinite()) throw Error("heat2d_system: non-finite conductivity field");

  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const Eigen::Index s = grid.s;
  const Vector kappa = u.array().exp();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * grid.size()));
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      const Eigen::Index row = grid.index(i, j);
      double diag = 0.0;
      const std::pair<Eigen::Index, Eigen::Index> neighbors[4] = {
          {i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& [ni, nj] : neighbors) {
        const bool interior = ni >= 0 && ni < s && nj >= 0 && nj < s;
        const double k_face =
            interior ? face_value(kappa[row], kappa[grid.index(ni, nj)], face)
                     : kappa[row];
        diag += k_face * inv_h2;
        if (interior)
          triplets.emplace_back(row, grid.index(ni, nj), -k_face * inv_h2);
      }
      triplets.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> a(grid.size(), grid.size());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Vector heat2d_solve(const Grid2D& grid, const Vector& u, double f,
                    FaceAverage face) {
  const Eigen::SparseMatrix<double> a = heat2d_system(grid, u, face);
  // div(e^u grad p) = f in SPD form reads A p = -f.
  const Vector rhs = Vector::Constant(grid.size(), -f);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error("heat2d_solve: sparse factorization failed");
  Vector p = solver.solve(rhs);
  double resid = (a * p - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (resid > 1e-10) {
    p += solver.solve(rhs - a * p);
    resid = (a * p - rhs).norm() / std::max(rhs.norm(), 1e-300);
  }
  if (resid > 1e-10) {
    std::ostringstream msg;
    msg << "heat2d_solve: residual " << resid << " above 1e-10";
    throw Error(msg.str());
  }
  return p;
}

Vector heat2d_forward(const Grid2D& grid, const Vector& u,
                      const std::vector<Eigen::Index>& obs_indices, double f,
                      FaceAverage face) {
  for (const auto idx : obs_indices)
    if (idx < 0 || idx >= grid.size())
      throw Error("heat2d_forward: observation index out of range");
  const Vector p = heat2d_solve(grid, u, f, face);
  Vector out(static_cast<Eigen::Index>(obs_indices.size()));
  for (std::size_t r = 0; r < obs_indices.size(); ++r)
    out[static_cast<Eigen::Index>(r)] = p[obs_indices[r]];
  return out;
}

ForwardOperator heat2d_operator(Grid2D grid,
                                std::vector<Eigen::Index> obs_indices,
                                double f, FaceAverage face) {
  grid.validate();
  const auto m = static_cast<Eigen::Index>(obs_indices.size());
  return ForwardOperator::nonlinear(
      m, grid.size(),
      [grid, obs = std::move(obs_indices), f, face](const Vector& u) {
        return heat2d_forward(grid, u, obs, f, face);
      });
}

struct LaplaceSquaredPrior::Impl {
  Eigen::SparseMatrix<double> laplace;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver;
};

LaplaceSquaredPrior::LaplaceSquaredPrior(const Grid2D& grid)
    : grid_(grid), impl_(std::make_unique<Impl>()) {
  impl_->laplace = laplacian(grid_);
  impl_->solver.compute(impl_->laplace);
  if (impl_->solver.info() != Eigen::Success)
    throw Error("LaplaceSquaredPrior: factorization failed");
}

LaplaceSquaredPrior::~LaplaceSquaredPrior() = default;
LaplaceSquaredPrior::LaplaceSquaredPrior(LaplaceSquaredPrior&&) noexcept = default;

Vector LaplaceSquaredPrior::sample(RngStream& rng) const {
  return impl_->solver.solve(rng.gaussian_vector(grid_.size()).eval());
}

Matrix LaplaceSquaredPrior::dense_covariance() const {
  const Matrix inv =
      impl_->solver.solve(Matrix::Identity(grid_.size(), grid_.size()));
  Matrix cov = inv * inv.transpose();
  return 0.5 * (cov + cov.transpose());
}

GaussianMeasure LaplaceSquaredPrior::measure() const {
  const Matrix inv =
      impl_->solver.solve(Matrix::Identity(grid_.size(), grid_.size()));
  return GaussianMeasure::from_factor(Vector::Zero(grid_.size()), inv);
}

}  // namespace enki
