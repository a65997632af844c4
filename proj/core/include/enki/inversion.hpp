#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "enki/types.hpp"

namespace enki {

struct Termination {
  double eps_c = 1e-5;       // relative-change tolerance
  int max_iterations = 10000;

  void validate() const;
};

enum class StopReason { converged, iteration_cap };
const char* to_string(StopReason reason);

/// Residual and output-covariance data of one ensemble against the data d,
/// computed with a single forward sweep (N evaluations). For a linear map
/// the output covariance equals A C A^T exactly.
class ResidualStats {
 public:
  ResidualStats(const Ensemble& e, const ForwardOperator& op, const Vector& d);
  /// Assembles stats from raw pieces (synthetic instances, diagnostics).
  static ResidualStats from_raw(Matrix output_cov, Matrix residuals);

  const Vector& r_bar() const { return r_bar_; }
  const Matrix& residuals() const { return residuals_; }               // m x N
  const Matrix& output_cov() const { return output_cov_; }             // S
  const Matrix& state_deviations() const { return state_deviations_; } // n x N
  const Matrix& output_deviations() const { return output_deviations_; }
  Eigen::Index ensemble_size() const { return residuals_.cols(); }

  /// Eigenvalue extremes of S, computed once on first use.
  double lambda_min() const;
  double lambda_max() const;

 private:
  ResidualStats() = default;
  Vector r_bar_;
  Matrix residuals_;
  Matrix output_cov_;
  Matrix state_deviations_;
  Matrix output_deviations_;
  mutable std::optional<std::pair<double, double>> extremes_;
};

/// Data misfit (1/2) ||d - G(u)||^2 / mu for Sigma_h = mu I.
double misfit_loss(const Vector& u, const ForwardOperator& op,
                   const NoiseModel& noise, const Vector& d);

/// Orthonormal basis of the span of the initial particles (thin SVD).
Matrix orthonormal_span(const Ensemble& initial);

/// ||u - P u||_2 / max(||u||_2, 1e-30) with P the projection onto the given
/// orthonormal basis.
double subspace_residual(const Vector& u, const Matrix& basis);

/// Spectral norm of the sample covariance, via the N x N Gram matrix of the
/// deviations.
double spread(const Ensemble& e);

/// One assimilation step with per-particle correction factors:
/// u_i += alpha_i C_up (mu I + alpha_i S)^{-1} (d - G(u_i)).
/// alphas has either one entry (shared factor) or one per particle. One
/// Cholesky factorization per distinct factor, shared across the particles
/// that use it (factors keyed at 12 significant digits).
Ensemble apply_update(const Ensemble& e, const ResidualStats& stats,
                      const NoiseModel& noise, const Vector& alphas);

/// Convenience single step; computes the stats and applies the update.
Ensemble enki_step(const Ensemble& e, const ForwardOperator& op,
                   const NoiseModel& noise, const Vector& d,
                   double alpha = 1.0);

/// Per-iteration correction-factor policy. Returns one shared value (size 1)
/// or one value per particle. Policies own their cross-iteration state.
class AlphaPolicy {
 public:
  virtual ~AlphaPolicy() = default;
  virtual Vector alphas(int k, const ResidualStats& stats,
                        const NoiseModel& noise) = 0;
  /// Last regularizer value, when the policy uses one.
  virtual double delta() const { return 0.0; }
  /// Current ramp coefficient, when the policy uses one.
  virtual double eps_delta() const { return 0.0; }
  /// Optional cross-check value (e.g. the fixed-point factor recorded next
  /// to its Taylor approximation).
  virtual double diagnostic_alpha() const {
    return std::numeric_limits<double>::quiet_NaN();
  }
};

class VanillaPolicy : public AlphaPolicy {
 public:
  Vector alphas(int, const ResidualStats&, const NoiseModel&) override {
    return Vector::Ones(1);
  }
};

/// One history row per completed step k: the loss and spread describe the
/// pre-step ensemble, rel_change the step itself.
struct IterationRecord {
  int k = 0;
  double loss = 0.0;
  double rel_change = 0.0;
  double spread = 0.0;
  double alpha_min = 1.0;
  double alpha_max = 1.0;
  double alpha_mean = 1.0;
  double delta = 0.0;
  double eps_delta = 0.0;
  double alpha_fixed_point = std::numeric_limits<double>::quiet_NaN();
  double rel_error = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
  std::optional<Vector> truth;
  /// Called on every ensemble state, including the initial one (k = 0) and
  /// the state after each step.
  std::function<void(int k, const Ensemble&)> observer;
};

struct RunResult {
  Ensemble final_ensemble;
  int iterations = 0;
  StopReason reason = StopReason::converged;
  std::vector<IterationRecord> history;
  double final_loss = 0.0;
  double final_rel_error = std::numeric_limits<double>::quiet_NaN();
  long long forward_evaluations = 0;  // N * iterations + N, exactly
};

/// Iterates assimilation steps until the relative Frobenius change of the
/// particle matrix drops to eps_c or the iteration cap is reached. The
/// per-iteration loss is (1/2) ||d - mean(G)||^2 / mu, which coincides with
/// the misfit at the ensemble mean for linear maps and costs no extra
/// forward evaluations otherwise. Throws DivergenceError on non-finite
/// particles.
RunResult run(const Ensemble& initial, const ForwardOperator& op,
              const NoiseModel& noise, const Vector& d,
              const Termination& term, AlphaPolicy& policy,
              const RunOptions& options = {});

/// Vanilla inversion: constant unit correction factor.
RunResult run_vanilla(const Ensemble& initial, const ForwardOperator& op,
                      const NoiseModel& noise, const Vector& d,
                      const Termination& term, const RunOptions& options = {});

}  // namespace enki
