#pragma once

// Shared generators and the exact-draw construction used across the test
// suites. Everything here is deterministic given the stream passed in.

#include <cmath>

#include <Eigen/QR>

#include "enki/dual.hpp"
#include "enki/error.hpp"
#include "enki/linalg.hpp"
#include "enki/rng.hpp"

namespace enki::testing {

/// Random SPD matrix Q diag(lambda) Q^T with eigenvalues log-uniform in
/// [scale/cond, scale].
inline Matrix random_spd(Eigen::Index n, RngStream& rng, double cond = 10.0,
                         double scale = 1.0) {
  const Matrix g = rng.gaussian_matrix(n, n);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i)
    eig[i] = scale * std::exp(-std::log(cond) * rng.uniform());
  Matrix out = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

/// Well-conditioned random instance with SPD prior covariance and noise.
inline LinearProblem random_linear_problem(Eigen::Index n, Eigen::Index m,
                                           RngStream& rng, double cond = 10.0) {
  Matrix a = rng.gaussian_matrix(m, n) / std::sqrt(static_cast<double>(n));
  GaussianMeasure prior =
      GaussianMeasure::from_cov(rng.gaussian_vector(n), random_spd(n, rng, cond));
  Matrix sigma = random_spd(m, rng, cond, 0.5);
  Vector d = rng.gaussian_vector(m);
  return LinearProblem::create(std::move(a), std::move(prior),
                               std::move(sigma), std::move(d));
}

/// Draw with Omega Omega^T = C and delta_bar = sigma_bar = 0, built from a
/// Householder reflection whose first row is the normalized all-ones vector:
/// the remaining rows are orthonormal and sum-free, so Omega = C^{1/2} Q has
/// an exactly zero column mean. Requires N >= n + 1.
inline PerturbationDraw exact_draw(const LinearProblem& p,
                                   Eigen::Index ensemble_size) {
  const Eigen::Index n = p.state_dimension();
  const Eigen::Index m = p.data_dimension();
  if (ensemble_size < n + 1)
    throw Error("exact_draw: need ensemble size >= n + 1");

  Vector v = Vector::Zero(ensemble_size);
  v[0] = 1.0;
  v -= Vector::Constant(ensemble_size,
                        1.0 / std::sqrt(static_cast<double>(ensemble_size)));
  Matrix h = Matrix::Identity(ensemble_size, ensemble_size);
  const double vsq = v.squaredNorm();
  if (vsq > 0.0) h -= (2.0 / vsq) * (v * v.transpose());

  // Rows 1..n of H are orthonormal and orthogonal to the all-ones row 0.
  const Matrix q = h.middleRows(1, n);
  const Matrix omega = symmetric_sqrt(p.prior.cov()) * q;
  const double root_n = std::sqrt(static_cast<double>(ensemble_size));
  return PerturbationDraw::from_samples(root_n * omega,
                                        Matrix::Zero(m, ensemble_size));
}

}  // namespace enki::testing
