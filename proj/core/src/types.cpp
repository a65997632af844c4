#include "enki/types.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "enki/error.hpp"
#include "enki/parallel.hpp"

namespace enki {

Ensemble::Ensemble(Matrix particles) : particles_(std::move(particles)) {
  if (particles_.rows() < 1 || particles_.cols() < 1)
    throw Error("empty ensemble");
  if (!particles_.allFinite())
    throw Error("ensemble contains non-finite entries");
}

Vector Ensemble::mean() const { return particles_.rowwise().mean(); }

Matrix Ensemble::deviations() const {
  return particles_.colwise() - mean();
}

Matrix Ensemble::covariance() const {
  const Matrix dev = deviations();
  Matrix c = (dev * dev.transpose()) / static_cast<double>(size());
  return 0.5 * (c + c.transpose());
}

Matrix Ensemble::covariance_factor() const {
  return deviations() / std::sqrt(static_cast<double>(size()));
}

Vector sample_mean(const Ensemble& e) { return e.mean(); }

Matrix sample_covariance(const Ensemble& e) { return e.covariance(); }

GaussianMeasure GaussianMeasure::from_cov(Vector mean, Matrix cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw Error("GaussianMeasure: dimension mismatch");
  if (!is_symmetric(cov, 1e-12))
    throw Error("GaussianMeasure: covariance not symmetric");
  const auto [lo, hi] = eigenvalue_extremes(cov);
  (void)hi;
  if (lo < -1e-10 * infinity_norm(cov))
    throw Error("GaussianMeasure: covariance has a significantly negative eigenvalue");
  GaussianMeasure g;
  g.mean_ = std::move(mean);
  g.cov_ = std::move(cov);
  return g;
}

GaussianMeasure GaussianMeasure::from_factor(Vector mean, Matrix factor) {
  if (factor.rows() != mean.size())
    throw Error("GaussianMeasure: factor dimension mismatch");
  GaussianMeasure g;
  g.mean_ = std::move(mean);
  g.cov_ = factor * factor.transpose();
  g.cov_ = 0.5 * (g.cov_ + g.cov_.transpose()).eval();
  g.factor_ = std::move(factor);
  return g;
}

const Matrix& GaussianMeasure::factor() const {
  if (!factor_) factor_ = symmetric_sqrt(cov_);
  return *factor_;
}

Vector GaussianMeasure::sample(RngStream& rng) const {
  return mean_ + factor() * rng.gaussian_vector(factor().cols());
}

NoiseModel::NoiseModel(double mu_in, Eigen::Index m_in) : mu(mu_in), m(m_in) {
  if (mu <= 0.0) throw Error("NoiseModel: mu must be positive");
  if (m < 1) throw Error("NoiseModel: observation dimension must be >= 1");
}

ForwardOperator ForwardOperator::linear(Matrix a) {
  ForwardOperator op;
  op.m_ = a.rows();
  op.n_ = a.cols();
  op.a_ = std::move(a);
  return op;
}

ForwardOperator ForwardOperator::nonlinear(Eigen::Index m, Eigen::Index n,
                                           ApplyFn fn) {
  ForwardOperator op;
  op.m_ = m;
  op.n_ = n;
  op.fn_ = std::move(fn);
  return op;
}

const Matrix& ForwardOperator::matrix() const {
  if (!a_) throw Error("ForwardOperator: nonlinear map has no matrix");
  return *a_;
}

Vector ForwardOperator::apply(const Vector& u) const {
  if (u.size() != n_) throw Error("ForwardOperator: input dimension mismatch");
  if (a_) return *a_ * u;
  Vector out = fn_(u);
  if (out.size() != m_)
    throw Error("ForwardOperator: map returned wrong output dimension");
  return out;
}

Matrix ForwardOperator::apply_ensemble(const Ensemble& e) const {
  if (e.dimension() != n_)
    throw Error("ForwardOperator: ensemble dimension mismatch");
  if (a_) return *a_ * e.particles();

  Matrix out(m_, e.size());
  parallel_for(static_cast<std::size_t>(e.size()), [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    try {
      out.col(col) = apply(e.particles().col(col));
    } catch (const std::exception& ex) {
      throw Error("forward map failed on particle " + std::to_string(i) +
                  ": " + ex.what());
    }
  });
  return out;
}

ForwardStats ensemble_forward_stats(const Ensemble& e,
                                    const ForwardOperator& op) {
  const double n_particles = static_cast<double>(e.size());
  const Matrix images = op.apply_ensemble(e);
  ForwardStats stats;
  stats.mean_output = images.rowwise().mean();
  const Matrix out_dev = images.colwise() - stats.mean_output;
  const Matrix state_dev = e.deviations();
  stats.cross_cov = (state_dev * out_dev.transpose()) / n_particles;
  stats.output_cov = (out_dev * out_dev.transpose()) / n_particles;
  stats.output_cov = 0.5 * (stats.output_cov + stats.output_cov.transpose()).eval();
  return stats;
}

}  // namespace enki
