#pragma once

#include "enki/types.hpp"

namespace enki {

/// Single-step linear Gaussian inverse problem: data d = A u + noise with
/// noise ~ N(0, Sigma) and prior N(u0, C).
struct LinearProblem {
  Matrix a;               // m x n
  GaussianMeasure prior;  // u0, C
  Matrix sigma;           // m x m, SPD
  Vector d;               // m

  /// Validates dimensions and that Sigma admits a Cholesky factorization.
  static LinearProblem create(Matrix a, GaussianMeasure prior, Matrix sigma,
                              Vector d);

  Eigen::Index state_dimension() const { return a.cols(); }
  Eigen::Index data_dimension() const { return a.rows(); }
};

/// Prior/noise perturbation ensemble for one randomized assimilation step:
/// delta_i ~ N(0, C), sigma_i ~ N(0, Sigma), omega = deltas / sqrt(N).
struct PerturbationDraw {
  Matrix deltas;     // n x N
  Matrix sigmas;     // m x N
  Matrix omega;      // deltas / sqrt(N), exactly
  Vector delta_bar;  // column mean of deltas
  Vector sigma_bar;  // column mean of sigmas

  static PerturbationDraw from_samples(Matrix deltas, Matrix sigmas);
  static PerturbationDraw sample(const LinearProblem& p,
                                 Eigen::Index ensemble_size, RngStream& rng);

  Eigen::Index size() const { return deltas.cols(); }
};

/// Repeated-draw helper that caches the prior and noise factors.
class DrawSampler {
 public:
  explicit DrawSampler(const LinearProblem& p);
  PerturbationDraw sample(Eigen::Index ensemble_size, RngStream& rng) const;

 private:
  Eigen::Index n_;
  Eigen::Index m_;
  Matrix prior_factor_;
  Matrix sigma_factor_;
};

/// Regularized least-squares solution through the normal equations;
/// requires invertible C and Sigma. Rank-deficient priors must go through
/// solve_dual_lambda / map_from_dual instead.
Vector solve_map_primal(const LinearProblem& p);

/// Dual multiplier: solves (Sigma + A C A^T) lambda = A u0 - d. The returned
/// solution satisfies the system to 1e-10 relative residual.
Vector solve_dual_lambda(const LinearProblem& p);

/// Primal point induced by a dual multiplier: u0 - C A^T lambda. Accepts the
/// exact multiplier or a sample-average one.
Vector map_from_dual(const LinearProblem& p, const Vector& lambda);

/// Sample-average dual solve:
/// (Sigma + A Omega Omega^T A^T) lambda = A(u0 + delta_bar) - (d + sigma_bar),
/// assembled through A*Omega products only.
Vector solve_dual_saa(const LinearProblem& p, const PerturbationDraw& draw);

struct EnkfUpdate {
  Matrix per_particle;  // n x N, column i is the updated particle i
  Vector mean;          // column average
};

/// Randomized single assimilation step. One Cholesky factorization of the
/// m x m system matrix is shared across all particles.
EnkfUpdate enkf_update(const LinearProblem& p, const PerturbationDraw& draw);

/// Mean of the randomized update computed directly from the draw means;
/// identical to EnkfUpdate::mean because the update is affine per particle.
Vector enkf_mean_update(const LinearProblem& p, const PerturbationDraw& draw);

}  // namespace enki
