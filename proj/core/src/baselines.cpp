#include "enki/baselines.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Cholesky>

#include "enki/error.hpp"

namespace enki {

double chada_alpha(int k, double beta) {
  if (k < 1) throw Error("chada_alpha: k must be >= 1");
  return std::pow(static_cast<double>(k), beta);
}

ChadaPolicy::ChadaPolicy(double beta) : beta_(beta) {
  if (beta < 0.0 || beta > 0.8)
    throw Error("ChadaPolicy: beta must be in [0, 0.8]");
}

Vector ChadaPolicy::alphas(int k, const ResidualStats&, const NoiseModel&) {
  return Vector::Constant(1, chada_alpha(k + 1, beta_));
}

namespace {

double anderson_objective(double alpha, const Matrix& s, const Vector& r,
                          double mu) {
  Matrix m_alpha = alpha * s;
  m_alpha.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(m_alpha);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  const double quad = 0.5 * r.dot(llt.solve(r));
  const double logdet =
      Matrix(llt.matrixL()).diagonal().array().log().sum();  // (1/2) log det
  return quad + logdet + 0.5 * (alpha - 1.0) * (alpha - 1.0);
}

}  // namespace

double anderson_alpha(const Matrix& output_cov, const Vector& r_bar, double mu,
                      const AndersonBracket& bracket) {
  if (bracket.lo <= 0.0 || bracket.hi <= bracket.lo)
    throw Error("anderson_alpha: invalid bracket");

  auto objective = [&](double a) {
    return anderson_objective(a, output_cov, r_bar, mu);
  };

  // Coarse log-spaced scan to bracket the minimizer.
  const int n_scan = 256;
  const double log_lo = std::log(bracket.lo);
  const double log_hi = std::log(bracket.hi);
  double best_value = std::numeric_limits<double>::infinity();
  int best_index = -1;
  std::vector<double> grid(n_scan);
  for (int i = 0; i < n_scan; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (n_scan - 1));
    const double value = objective(grid[i]);
    if (std::isfinite(value) && value < best_value) {
      best_value = value;
      best_index = i;
    }
  }
  if (best_index < 0) throw Error("anderson_alpha: objective is NaN everywhere");

  double lo = grid[std::max(best_index - 1, 0)];
  double hi = grid[std::min(best_index + 1, n_scan - 1)];

  // Golden-section refinement.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }

  // The refined point must not lose to the scan minimum, the bracket ends or
  // the unit factor (minimizers pinned at a bracket end land here).
  double best_alpha = 0.5 * (lo + hi);
  best_value = objective(best_alpha);
  for (const double candidate :
       {grid[static_cast<std::size_t>(best_index)], bracket.lo, bracket.hi, 1.0}) {
    const double value = objective(candidate);
    if (std::isfinite(value) && value < best_value) {
      best_value = value;
      best_alpha = candidate;
    }
  }
  return best_alpha;
}

double anderson_alpha(const ResidualStats& stats, double mu,
                      const AndersonBracket& bracket) {
  return anderson_alpha(stats.output_cov(), stats.r_bar(), mu, bracket);
}

AndersonPolicy::AndersonPolicy(AndersonBracket bracket) : bracket_(bracket) {}

Vector AndersonPolicy::alphas(int, const ResidualStats& stats,
                              const NoiseModel& noise) {
  return Vector::Constant(1, anderson_alpha(stats, noise.mu, bracket_));
}

RunResult run_nesterov(const Ensemble& initial, const ForwardOperator& op,
                       const NoiseModel& noise, const Vector& d,
                       const Termination& term, const RunOptions& options) {
  term.validate();
  const Eigen::Index n_particles = initial.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto rel_error_of = [&](const Ensemble& e) {
    if (!options.truth) return nan;
    return (e.mean() - *options.truth).norm() / options.truth->norm();
  };

  RunResult result{initial, 0, StopReason::iteration_cap, {}, 0.0, nan, 0};
  Ensemble ensemble = initial;
  Matrix previous = initial.particles();
  if (options.observer) options.observer(0, ensemble);

  int k = 0;
  for (;;) {
    if (k >= term.max_iterations) {
      result.reason = StopReason::iteration_cap;
      break;
    }
    const double coef = k <= 0 ? 0.0
                               : static_cast<double>(k - 1) /
                                     static_cast<double>(k + 2);
    const Ensemble extrapolated(ensemble.particles() +
                                coef * (ensemble.particles() - previous));
    const ResidualStats stats(extrapolated, op, d);
    result.forward_evaluations += n_particles;
    Ensemble next = [&] {
      try {
        return apply_update(extrapolated, stats, noise, Vector::Ones(1));
      } catch (const Error& e) {
        throw DivergenceError("divergence detected at iteration " +
                                  std::to_string(k) + ": " + e.what(),
                              k);
      }
    }();
    if (!next.particles().allFinite())
      throw DivergenceError(
          "divergence detected at iteration " + std::to_string(k), k);

    const double denom = std::max(ensemble.particles().norm(), 1e-300);
    const double rel_change =
        (next.particles() - ensemble.particles()).norm() / denom;

    IterationRecord rec;
    rec.k = k;
    rec.loss = 0.5 * stats.r_bar().squaredNorm() / noise.mu;
    rec.rel_change = rel_change;
    rec.spread = spread(ensemble);
    rec.rel_error = rel_error_of(ensemble);
    result.history.push_back(rec);

    previous = ensemble.particles();
    ensemble = std::move(next);
    ++k;
    if (options.observer) options.observer(k, ensemble);
    if (rel_change <= term.eps_c) {
      result.reason = StopReason::converged;
      break;
    }
  }

  result.iterations = k;
  const ResidualStats final_stats(ensemble, op, d);
  result.forward_evaluations += n_particles;
  result.final_loss = 0.5 * final_stats.r_bar().squaredNorm() / noise.mu;
  result.final_rel_error = rel_error_of(ensemble);
  result.final_ensemble = std::move(ensemble);
  return result;
}

}  // namespace enki
