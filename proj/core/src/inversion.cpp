#include "enki/inversion.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "enki/error.hpp"

namespace enki {

void Termination::validate() const {
  if (eps_c <= 0.0) throw Error("Termination: eps_c must be positive");
  if (max_iterations < 1) throw Error("Termination: iteration cap must be >= 1");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged:
      return "converged";
    case StopReason::iteration_cap:
      return "iteration_cap";
  }
  return "unknown";
}

ResidualStats::ResidualStats(const Ensemble& e, const ForwardOperator& op,
                             const Vector& d) {
  if (d.size() != op.output_dimension())
    throw Error("ResidualStats: data dimension mismatch");
  const double n_particles = static_cast<double>(e.size());
  const Matrix images = op.apply_ensemble(e);
  const Vector mean_image = images.rowwise().mean();
  state_deviations_ = e.deviations();
  output_deviations_ = images.colwise() - mean_image;
  output_cov_ = (output_deviations_ * output_deviations_.transpose()) / n_particles;
  output_cov_ = 0.5 * (output_cov_ + output_cov_.transpose()).eval();
  residuals_ = (-images).colwise() + d;
  r_bar_ = d - mean_image;
}

ResidualStats ResidualStats::from_raw(Matrix output_cov, Matrix residuals) {
  ResidualStats stats;
  stats.r_bar_ = residuals.rowwise().mean();
  stats.residuals_ = std::move(residuals);
  stats.output_cov_ = std::move(output_cov);
  return stats;
}

namespace {

// Spectrum extremes of S = (1/N) G_dev G_dev^T. When N < m the rank
// deficiency pins lambda_min at zero and the nonzero spectrum equals that of
// the N x N Gram matrix, which is much cheaper to decompose.
std::pair<double, double> output_cov_extremes(const Matrix& output_cov,
                                              const Matrix& output_dev) {
  const Eigen::Index m = output_cov.rows();
  const Eigen::Index n_particles = output_dev.cols();
  if (output_dev.size() == 0 || n_particles >= m)
    return eigenvalue_extremes(output_cov);
  Matrix gram = (output_dev.transpose() * output_dev) /
                static_cast<double>(n_particles);
  gram = 0.5 * (gram + gram.transpose()).eval();
  const auto [lo, hi] = eigenvalue_extremes(gram);
  (void)lo;
  return {0.0, std::max(hi, 0.0)};
}

}  // namespace

double ResidualStats::lambda_min() const {
  if (!extremes_)
    extremes_ = output_cov_extremes(output_cov_, output_deviations_);
  return extremes_->first;
}

double ResidualStats::lambda_max() const {
  if (!extremes_)
    extremes_ = output_cov_extremes(output_cov_, output_deviations_);
  return extremes_->second;
}

double misfit_loss(const Vector& u, const ForwardOperator& op,
                   const NoiseModel& noise, const Vector& d) {
  const Vector r = d - op.apply(u);
  return 0.5 * r.squaredNorm() / noise.mu;
}

Matrix orthonormal_span(const Ensemble& initial) {
  Eigen::BDCSVD<Matrix> svd(initial.particles(), Eigen::ComputeThinU);
  const double tol = 1e-12 * svd.singularValues().maxCoeff();
  Eigen::Index rank = 0;
  while (rank < svd.singularValues().size() &&
         svd.singularValues()[rank] > tol)
    ++rank;
  return svd.matrixU().leftCols(std::max<Eigen::Index>(rank, 1));
}

double subspace_residual(const Vector& u, const Matrix& basis) {
  const Vector residual = u - basis * (basis.transpose() * u);
  return residual.norm() / std::max(u.norm(), 1e-30);
}

double spread(const Ensemble& e) {
  const Matrix dev = e.deviations();
  Matrix gram = (dev.transpose() * dev) / static_cast<double>(e.size());
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("spread: eigensolver failed");
  return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

namespace {

std::string alpha_key(double alpha) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", alpha);
  return buf;
}

}  // namespace

Ensemble apply_update(const Ensemble& e, const ResidualStats& stats,
                      const NoiseModel& noise, const Vector& alphas) {
  const Eigen::Index n_particles = e.size();
  if (alphas.size() != 1 && alphas.size() != n_particles)
    throw Error("apply_update: alphas must have size 1 or N");
  const Eigen::Index m = stats.output_cov().rows();
  const double inv_n = 1.0 / static_cast<double>(n_particles);

  // Group particles sharing a factor so each distinct alpha costs one
  // Cholesky factorization.
  std::map<std::string, std::pair<double, std::vector<Eigen::Index>>> groups;
  for (Eigen::Index i = 0; i < n_particles; ++i) {
    const double a = alphas.size() == 1 ? alphas[0] : alphas[i];
    groups[alpha_key(a)].first = a;
    groups[alpha_key(a)].second.push_back(i);
  }

  Matrix updated = e.particles();
  for (const auto& [key, group] : groups) {
    (void)key;
    const double alpha = group.first;
    Matrix m_alpha = alpha * stats.output_cov();
    m_alpha.diagonal().array() += noise.mu;
    Eigen::LLT<Matrix> llt(m_alpha);
    if (llt.info() != Eigen::Success)
      throw Error("apply_update: internal: mu I + alpha S is not SPD");

    Matrix rhs(m, static_cast<Eigen::Index>(group.second.size()));
    for (std::size_t j = 0; j < group.second.size(); ++j)
      rhs.col(static_cast<Eigen::Index>(j)) =
          stats.residuals().col(group.second[j]);
    const Matrix w = llt.solve(rhs);
    // alpha * C_up * w through the deviation factors.
    const Matrix delta = (alpha * inv_n) * (stats.state_deviations() *
                                            (stats.output_deviations().transpose() * w));
    for (std::size_t j = 0; j < group.second.size(); ++j)
      updated.col(group.second[j]) += delta.col(static_cast<Eigen::Index>(j));
  }
  return Ensemble(std::move(updated));
}

Ensemble enki_step(const Ensemble& e, const ForwardOperator& op,
                   const NoiseModel& noise, const Vector& d, double alpha) {
  const ResidualStats stats(e, op, d);
  return apply_update(e, stats, noise, Vector::Constant(1, alpha));
}

RunResult run(const Ensemble& initial, const ForwardOperator& op,
              const NoiseModel& noise, const Vector& d,
              const Termination& term, AlphaPolicy& policy,
              const RunOptions& options) {
  term.validate();
  const Eigen::Index n_particles = initial.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto rel_error_of = [&](const Ensemble& e) {
    if (!options.truth) return nan;
    return (e.mean() - *options.truth).norm() / options.truth->norm();
  };

  RunResult result{initial, 0, StopReason::iteration_cap, {}, 0.0, nan, 0};
  Ensemble ensemble = initial;
  if (options.observer) options.observer(0, ensemble);

  int k = 0;
  for (;;) {
    if (k >= term.max_iterations) {
      result.reason = StopReason::iteration_cap;
      break;
    }
    const ResidualStats stats(ensemble, op, d);
    result.forward_evaluations += n_particles;
    const Vector alphas = policy.alphas(k, stats, noise);

    Ensemble next = [&] {
      try {
        return apply_update(ensemble, stats, noise, alphas);
      } catch (const Error& e) {
        throw DivergenceError(
            "divergence detected at iteration " + std::to_string(k) + ": " +
                e.what(),
            k);
      }
    }();
    if (!next.particles().allFinite())
      throw DivergenceError(
          "divergence detected at iteration " + std::to_string(k), k);

    const double denom = std::max(ensemble.particles().norm(), 1e-300);
    const double rel_change = (next.particles() - ensemble.particles()).norm() / denom;

    IterationRecord rec;
    rec.k = k;
    rec.loss = 0.5 * stats.r_bar().squaredNorm() / noise.mu;
    rec.rel_change = rel_change;
    rec.spread = spread(ensemble);
    rec.alpha_min = alphas.minCoeff();
    rec.alpha_max = alphas.maxCoeff();
    rec.alpha_mean = alphas.mean();
    rec.delta = policy.delta();
    rec.eps_delta = policy.eps_delta();
    rec.alpha_fixed_point = policy.diagnostic_alpha();
    rec.rel_error = rel_error_of(ensemble);
    result.history.push_back(rec);

    ensemble = std::move(next);
    ++k;
    if (options.observer) options.observer(k, ensemble);
    if (rel_change <= term.eps_c) {
      result.reason = StopReason::converged;
      break;
    }
  }

  result.iterations = k;
  // Final residual sweep; this is the extra +N in the evaluation count.
  const ResidualStats final_stats(ensemble, op, d);
  result.forward_evaluations += n_particles;
  result.final_loss = 0.5 * final_stats.r_bar().squaredNorm() / noise.mu;
  result.final_rel_error = rel_error_of(ensemble);
  result.final_ensemble = std::move(ensemble);
  return result;
}

RunResult run_vanilla(const Ensemble& initial, const ForwardOperator& op,
                      const NoiseModel& noise, const Vector& d,
                      const Termination& term, const RunOptions& options) {
  VanillaPolicy policy;
  return run(initial, op, noise, d, term, policy, options);
}

}  // namespace enki
