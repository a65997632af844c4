#pragma once

#include <functional>
#include <optional>

#include "enki/linalg.hpp"
#include "enki/rng.hpp"

namespace enki {

/// Collection of N particles in R^n, one particle per column. Immutable
/// after construction; all operations on it are pure.
class Ensemble {
 public:
  /// Throws "empty ensemble" when the matrix has no rows or columns, and
  /// rejects non-finite entries.
  explicit Ensemble(Matrix particles);

  Eigen::Index dimension() const { return particles_.rows(); }
  Eigen::Index size() const { return particles_.cols(); }
  const Matrix& particles() const { return particles_; }

  Vector mean() const;
  /// particles - mean, n x N.
  Matrix deviations() const;
  /// (1/N)-normalized outer-product sum of deviations. Note the 1/N
  /// normalization; many filtering references use 1/(N-1) instead.
  Matrix covariance() const;
  /// F = deviations / sqrt(N), so F F^T equals covariance(). Products of the
  /// form C * A^T should go through this factor when N < n.
  Matrix covariance_factor() const;

 private:
  Matrix particles_;
};

Vector sample_mean(const Ensemble& e);
Matrix sample_covariance(const Ensemble& e);

/// Gaussian measure N(mean, cov) with an optionally cached factor F
/// satisfying F F^T = cov. Sampling uses the factor.
class GaussianMeasure {
 public:
  /// Validates symmetry (1e-12 relative) and the eigenvalue floor
  /// (>= -1e-10 * ||cov||).
  static GaussianMeasure from_cov(Vector mean, Matrix cov);
  /// Builds cov = factor * factor^T; no further validation needed.
  static GaussianMeasure from_factor(Vector mean, Matrix factor);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index dimension() const { return mean_.size(); }
  /// Factor with F F^T = cov; computed once via the symmetric square root
  /// when the measure was built from a dense covariance.
  const Matrix& factor() const;
  Vector sample(RngStream& rng) const;

 private:
  GaussianMeasure() = default;
  Vector mean_;
  Matrix cov_;
  mutable std::optional<Matrix> factor_;
};

/// Observation noise model Sigma_h = mu * I(m).
struct NoiseModel {
  double mu = 0.01;
  Eigen::Index m = 0;

  NoiseModel(double mu_in, Eigen::Index m_in);
  Matrix dense() const { return mu * Matrix::Identity(m, m); }
};

/// Forward map u -> G(u), either an explicit matrix or an opaque map.
/// Maps must be deterministic, side-effect free and shareable across
/// threads; ensemble application is a parallel map over particles.
class ForwardOperator {
 public:
  using ApplyFn = std::function<Vector(const Vector&)>;

  static ForwardOperator linear(Matrix a);
  static ForwardOperator nonlinear(Eigen::Index m, Eigen::Index n, ApplyFn fn);

  bool is_linear() const { return a_.has_value(); }
  /// Matrix of a linear operator; throws for nonlinear maps.
  const Matrix& matrix() const;
  Eigen::Index input_dimension() const { return n_; }
  Eigen::Index output_dimension() const { return m_; }

  Vector apply(const Vector& u) const;
  /// m x N image of all particles. Failures are rethrown with the particle
  /// index attached.
  Matrix apply_ensemble(const Ensemble& e) const;

 private:
  ForwardOperator() = default;
  std::optional<Matrix> a_;
  ApplyFn fn_;
  Eigen::Index m_ = 0;
  Eigen::Index n_ = 0;
};

struct Observation {
  Vector d;
  std::optional<Vector> truth;
};

/// Cross-covariance, output covariance and mean forward image of an
/// ensemble pushed through G.
struct ForwardStats {
  Matrix cross_cov;   // C_up, n x m
  Matrix output_cov;  // C_pp, m x m, symmetric PSD
  Vector mean_output;
};

ForwardStats ensemble_forward_stats(const Ensemble& e, const ForwardOperator& op);

}  // namespace enki
