#include "enki/correction.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "enki/error.hpp"

namespace enki {

void DeltaParams::validate() const {
  if (q <= 0.0 || q >= 1.0) throw Error("DeltaParams: q must be in (0, 1)");
  if (eps_delta <= 0.0) throw Error("DeltaParams: eps_delta must be positive");
  if (alpha_bound <= 1.0) throw Error("DeltaParams: alpha_bound must be > 1");
}

CorrectionQuadratics correction_quadratics(double alpha, const Matrix& s,
                                           const Vector& r, double mu) {
  if (alpha < 1.0) throw Error("correction_quadratics: alpha must be >= 1");
  if (mu <= 0.0) throw Error("correction_quadratics: mu must be positive");
  Matrix m_alpha = alpha * s;
  m_alpha.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(m_alpha);
  if (llt.info() != Eigen::Success)
    throw Error("correction_quadratics: mu I + alpha S is not SPD");
  const Vector w = llt.solve(r);
  const Vector sw = s * w;
  CorrectionQuadratics q;
  q.f1 = std::max(r.dot(w), 0.0);
  q.f2 = std::max(w.dot(sw), 0.0);
  q.f3 = std::max(sw.dot(llt.solve(sw)), 0.0);
  return q;
}

double correction_regularizer(int k, double lambda_min, double lambda_max,
                              double residual_norm, double q, double eps_delta,
                              double mu) {
  if (k < 0) throw Error("correction_regularizer: k must be >= 0");
  const double lo = std::max(lambda_min, 0.0);
  const double denom = std::pow(mu + lo, 4);
  const double r2 = residual_norm * residual_norm;
  return (3.0 / (4.0 * q)) * lambda_max * lambda_max * r2 * r2 / denom +
         eps_delta * static_cast<double>(k);
}

double correction_regularizer(int k, const ResidualStats& stats,
                              const DeltaParams& params, double mu) {
  return correction_regularizer(k, stats.lambda_min(), stats.lambda_max(),
                                stats.r_bar().norm(), params.q,
                                params.eps_delta, mu);
}

double correction_map(double alpha, const Matrix& s, const Vector& r,
                      double delta, double mu) {
  if (delta <= 0.0) throw Error("correction_map: delta must be positive");
  const CorrectionQuadratics q = correction_quadratics(alpha, s, r, mu);
  return 1.0 + q.f1 * q.f2 / (4.0 * delta);
}

double correction_map_derivative(double alpha, const Matrix& s,
                                 const Vector& r, double delta, double mu) {
  if (delta <= 0.0)
    throw Error("correction_map_derivative: delta must be positive");
  const CorrectionQuadratics q = correction_quadratics(alpha, s, r, mu);
  return -(q.f2 * q.f2 + 2.0 * q.f1 * q.f3) / (4.0 * delta);
}

double correction_fixed_point(const Matrix& s, const Vector& r, double delta,
                              double mu, double start, double tol) {
  if (delta <= 0.0)
    throw Error("correction_fixed_point: delta must be positive");
  double alpha = std::max(start, 1.0);
  for (int p = 0; p < 1000; ++p) {
    const double next = correction_map(alpha, s, r, delta, mu);
    if (std::abs(next - alpha) <= tol) return next;
    alpha = next;
  }
  throw Error(
      "correction_fixed_point: no convergence after 1000 iterations "
      "(contraction violated)");
}

double correction_taylor_step(double alpha_prev, const Matrix& s,
                              const Vector& r, double delta, double mu) {
  if (alpha_prev < 1.0)
    throw Error("correction_taylor_step: alpha_prev must be >= 1");
  if (delta <= 0.0)
    throw Error("correction_taylor_step: delta must be positive");
  const CorrectionQuadratics q = correction_quadratics(alpha_prev, s, r, mu);
  const double z = 1.0 + q.f1 * q.f2 / (4.0 * delta);
  const double zp = -(q.f2 * q.f2 + 2.0 * q.f1 * q.f3) / (4.0 * delta);
  return std::max(alpha_prev + (z - alpha_prev) / (1.0 - zp), 1.0);
}

Mc1Policy::Mc1Policy(DeltaParams params, bool use_fixed_point,
                     bool record_fixed_point)
    : params_(params),
      use_fixed_point_(use_fixed_point),
      record_fixed_point_(record_fixed_point),
      eps_delta_current_(params.eps_delta),
      diagnostic_alpha_(std::numeric_limits<double>::quiet_NaN()) {
  params_.validate();
}

Vector Mc1Policy::alphas(int k, const ResidualStats& stats,
                         const NoiseModel& noise) {
  const Matrix& s = stats.output_cov();
  const Vector& r = stats.r_bar();
  const double lmin = stats.lambda_min();
  const double lmax = stats.lambda_max();
  const double rnorm = r.norm();

  auto regularizer = [&](double eps_delta) {
    return correction_regularizer(k, lmin, lmax, rnorm, params_.q, eps_delta,
                                  noise.mu);
  };

  double delta = regularizer(eps_delta_current_);
  double alpha = 1.0;
  // The correction starts at 1; both routes update it from iteration 1 on.
  if (delta > 0.0 && k > 0) {
    auto compute = [&](double d) {
      if (use_fixed_point_)
        return correction_fixed_point(s, r, d, noise.mu, alpha_prev_);
      return correction_taylor_step(alpha_prev_, s, r, d, noise.mu);
    };
    alpha = compute(delta);
    int attempts = 0;
    while (alpha > params_.alpha_bound) {
      eps_delta_current_ *= 10.0;
      delta = regularizer(eps_delta_current_);
      alpha = compute(delta);
      if (++attempts > 100)
        throw Error(
            "correction-factor guard failed to bring alpha below "
            "alpha_bound after 100 escalations");
    }
  }
  // delta == 0 happens only for degenerate stats (S = 0 or r = 0) at k = 0,
  // where the map is identically 1.

  if (record_fixed_point_) {
    diagnostic_alpha_ =
        (delta > 0.0 && k > 0)
            ? correction_fixed_point(s, r, delta, noise.mu, fixed_point_prev_)
            : 1.0;
    fixed_point_prev_ = diagnostic_alpha_;
  }
  delta_ = delta;
  alpha_prev_ = alpha;
  return Vector::Constant(1, alpha);
}

Mc2Policy::Mc2Policy(DeltaParams params, int recompute_every)
    : params_(params),
      recompute_every_(recompute_every),
      eps_delta_current_(params.eps_delta) {
  params_.validate();
  if (recompute_every_ < 1)
    throw Error("Mc2Policy: recompute interval must be >= 1");
}

void Mc2Policy::seed_previous(double alpha) { pending_seed_ = alpha; }

Vector Mc2Policy::alphas(int k, const ResidualStats& stats,
                         const NoiseModel& noise) {
  const Eigen::Index n_particles = stats.ensemble_size();
  if (alpha_prev_.size() != n_particles) {
    alpha_prev_ = Vector::Constant(n_particles, pending_seed_.value_or(1.0));
    cached_ = alpha_prev_;
  }
  if (k % recompute_every_ != 0) return cached_;

  const Matrix& s = stats.output_cov();
  const double lmin = stats.lambda_min();
  const double lmax = stats.lambda_max();

  Vector next(n_particles);
  double delta_sum = 0.0;
  int attempts = 0;
  for (;;) {
    delta_sum = 0.0;
    for (Eigen::Index i = 0; i < n_particles; ++i) {
      const Vector r_i = stats.residuals().col(i);
      const double delta_i =
          correction_regularizer(k, lmin, lmax, r_i.norm(), params_.q,
                                 eps_delta_current_, noise.mu);
      next[i] = delta_i > 0.0
                    ? correction_taylor_step(alpha_prev_[i], s, r_i, delta_i,
                                             noise.mu)
                    : 1.0;
      delta_sum += delta_i;
    }
    if (next.maxCoeff() <= params_.alpha_bound) break;
    eps_delta_current_ *= 10.0;
    if (++attempts > 100)
      throw Error(
          "correction-factor guard failed to bring max alpha below "
          "alpha_bound after 100 escalations");
  }

  delta_ = delta_sum / static_cast<double>(n_particles);
  alpha_prev_ = next;
  cached_ = next;
  return next;
}

namespace {

/// Shared-factor warmup followed by the per-particle policy.
class Mc2WithWarmup : public AlphaPolicy {
 public:
  Mc2WithWarmup(const McRunConfig& config)
      : warmup_(config.params, config.use_fixed_point, config.record_fixed_point),
        main_(config.params, config.recompute_every),
        warmup_iterations_(config.warmup_iterations) {}

  Vector alphas(int k, const ResidualStats& stats,
                const NoiseModel& noise) override {
    if (k < warmup_iterations_) {
      const Vector a = warmup_.alphas(k, stats, noise);
      in_warmup_ = true;
      return a;
    }
    if (in_warmup_) {
      main_.seed_previous(warmup_.alpha_prev());
      main_.set_eps_delta(warmup_.eps_delta());
      in_warmup_ = false;
    }
    return main_.alphas(k, stats, noise);
  }
  double delta() const override {
    return in_warmup_ ? warmup_.delta() : main_.delta();
  }
  double eps_delta() const override {
    return in_warmup_ ? warmup_.eps_delta() : main_.eps_delta();
  }

 private:
  Mc1Policy warmup_;
  Mc2Policy main_;
  int warmup_iterations_;
  bool in_warmup_ = true;
};

}  // namespace

RunResult run_mc1(const Ensemble& initial, const ForwardOperator& op,
                  const NoiseModel& noise, const Vector& d,
                  const Termination& term, const McRunConfig& config,
                  const RunOptions& options) {
  Mc1Policy policy(config.params, config.use_fixed_point,
                   config.record_fixed_point);
  return run(initial, op, noise, d, term, policy, options);
}

RunResult run_mc2(const Ensemble& initial, const ForwardOperator& op,
                  const NoiseModel& noise, const Vector& d,
                  const Termination& term, const McRunConfig& config,
                  const RunOptions& options) {
  Mc2WithWarmup policy(config);
  return run(initial, op, noise, d, term, policy, options);
}

}  // namespace enki
