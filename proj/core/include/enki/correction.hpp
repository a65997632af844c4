#pragma once

#include "enki/inversion.hpp"

namespace enki {

/// Parameters of the correction-factor regularizer delta(k).
struct DeltaParams {
  double q = 0.99;           // contraction target, in (0, 1)
  double eps_delta = 1e-15;  // ramp coefficient, positive
  double alpha_bound = 1e4;  // guard ceiling, > 1

  void validate() const;
};

/// Quadratic forms behind the correction map, all computed from one
/// Cholesky factorization of M(alpha) = mu I + alpha S with w = M^{-1} r:
///   f1 = r . w          (regularized misfit form)
///   f2 = w . S w        (its negative alpha-derivative)
///   f3 = (Sw) . M^{-1} (Sw)   (half the negative alpha-derivative of f2)
struct CorrectionQuadratics {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

CorrectionQuadratics correction_quadratics(double alpha, const Matrix& s,
                                           const Vector& r, double mu);

/// Regularizer delta(k) = (3/(4q)) lambda_max(S)^2 ||r||^4 /
/// (mu + lambda_min(S))^4 + eps_delta * k. lambda_min is clamped at zero
/// before use (sample covariances leave it numerically ~0 anyway).
double correction_regularizer(int k, double lambda_min, double lambda_max,
                              double residual_norm, double q, double eps_delta,
                              double mu);
double correction_regularizer(int k, const ResidualStats& stats,
                              const DeltaParams& params, double mu);

/// Correction map zeta(alpha) = 1 + f1 f2 / (4 delta); >= 1 for PSD S.
double correction_map(double alpha, const Matrix& s, const Vector& r,
                      double delta, double mu);

/// Its derivative -(f2^2 + 2 f1 f3) / (4 delta); always <= 0.
double correction_map_derivative(double alpha, const Matrix& s,
                                 const Vector& r, double delta, double mu);

/// Iterates alpha <- zeta(alpha) to the unique fixed point. delta produced
/// by correction_regularizer makes the map a contraction with rate <= q.
double correction_fixed_point(const Matrix& s, const Vector& r, double delta,
                              double mu, double start = 1.0,
                              double tol = 1e-10);

/// One Newton-type step on zeta(alpha) = alpha from the previous factor;
/// clamped below at 1. The denominator 1 - zeta' is >= 1 since zeta' <= 0.
double correction_taylor_step(double alpha_prev, const Matrix& s,
                              const Vector& r, double delta, double mu);

/// Shared correction factor, recomputed each iteration from the mean
/// residual. The Taylor step is the default; the fixed-point route sits
/// behind a flag and can also be recorded alongside as a diagnostic. When
/// the factor exceeds alpha_bound the ramp coefficient is raised tenfold
/// and the factor recomputed; the raised coefficient persists.
class Mc1Policy : public AlphaPolicy {
 public:
  explicit Mc1Policy(DeltaParams params, bool use_fixed_point = false,
                     bool record_fixed_point = false);

  Vector alphas(int k, const ResidualStats& stats,
                const NoiseModel& noise) override;
  double delta() const override { return delta_; }
  double eps_delta() const override { return eps_delta_current_; }
  double diagnostic_alpha() const override { return diagnostic_alpha_; }
  double alpha_prev() const { return alpha_prev_; }
  void set_eps_delta(double value) { eps_delta_current_ = value; }

 private:
  DeltaParams params_;
  bool use_fixed_point_;
  bool record_fixed_point_;
  double alpha_prev_ = 1.0;
  double fixed_point_prev_ = 1.0;
  double eps_delta_current_;
  double delta_ = 0.0;
  double diagnostic_alpha_;
};

/// Per-particle correction factors, recomputed only on iterations with
/// k % recompute_every == 0 and carried forward otherwise. The eigenvalue
/// extremes of S are computed once per recompute; the guard acts on the
/// largest factor.
class Mc2Policy : public AlphaPolicy {
 public:
  Mc2Policy(DeltaParams params, int recompute_every);

  Vector alphas(int k, const ResidualStats& stats,
                const NoiseModel& noise) override;
  double delta() const override { return delta_; }
  double eps_delta() const override { return eps_delta_current_; }
  /// Carries a warmup factor into all particles before the first recompute.
  void seed_previous(double alpha);
  void set_eps_delta(double value) { eps_delta_current_ = value; }

 private:
  DeltaParams params_;
  int recompute_every_;
  Vector alpha_prev_;  // empty until the first call
  Vector cached_;
  std::optional<double> pending_seed_;
  double eps_delta_current_;
  double delta_ = 0.0;
};

struct McRunConfig {
  DeltaParams params;
  int recompute_every = 5;     // per-particle variant
  int warmup_iterations = 10;  // shared-factor iterations before it
  bool use_fixed_point = false;
  bool record_fixed_point = false;
};

/// Accelerated inversion with the shared correction factor.
RunResult run_mc1(const Ensemble& initial, const ForwardOperator& op,
                  const NoiseModel& noise, const Vector& d,
                  const Termination& term, const McRunConfig& config = {},
                  const RunOptions& options = {});

/// Accelerated inversion with per-particle correction factors, after a
/// shared-factor warmup phase that reduces the residuals.
RunResult run_mc2(const Ensemble& initial, const ForwardOperator& op,
                  const NoiseModel& noise, const Vector& d,
                  const Termination& term, const McRunConfig& config = {},
                  const RunOptions& options = {});

}  // namespace enki
