#include "enki/dual.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>

#include "enki/error.hpp"

namespace enki {
namespace {

Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(what);
  return llt;
}

}  // namespace

LinearProblem LinearProblem::create(Matrix a, GaussianMeasure prior,
                                    Matrix sigma, Vector d) {
  if (prior.dimension() != a.cols())
    throw Error("LinearProblem: prior dimension does not match columns of A");
  if (sigma.rows() != a.rows() || sigma.cols() != a.rows())
    throw Error("LinearProblem: Sigma dimension does not match rows of A");
  if (d.size() != a.rows())
    throw Error("LinearProblem: data dimension does not match rows of A");
  cholesky_or_throw(sigma, "LinearProblem: Sigma is not SPD");
  return LinearProblem{std::move(a), std::move(prior), std::move(sigma),
                       std::move(d)};
}

PerturbationDraw PerturbationDraw::from_samples(Matrix deltas, Matrix sigmas) {
  if (deltas.cols() != sigmas.cols())
    throw Error("PerturbationDraw: delta/sigma ensemble sizes differ");
  if (deltas.cols() < 1) throw Error("PerturbationDraw: empty draw");
  PerturbationDraw draw;
  draw.omega = deltas / std::sqrt(static_cast<double>(deltas.cols()));
  draw.delta_bar = deltas.rowwise().mean();
  draw.sigma_bar = sigmas.rowwise().mean();
  draw.deltas = std::move(deltas);
  draw.sigmas = std::move(sigmas);
  return draw;
}

PerturbationDraw PerturbationDraw::sample(const LinearProblem& p,
                                          Eigen::Index ensemble_size,
                                          RngStream& rng) {
  return DrawSampler(p).sample(ensemble_size, rng);
}

DrawSampler::DrawSampler(const LinearProblem& p)
    : n_(p.state_dimension()),
      m_(p.data_dimension()),
      prior_factor_(p.prior.factor()) {
  Eigen::LLT<Matrix> llt(p.sigma);
  if (llt.info() != Eigen::Success)
    throw Error("DrawSampler: Sigma is not SPD");
  sigma_factor_ = llt.matrixL();
}

PerturbationDraw DrawSampler::sample(Eigen::Index ensemble_size,
                                     RngStream& rng) const {
  Matrix deltas = prior_factor_ * rng.gaussian_matrix(prior_factor_.cols(),
                                                      ensemble_size);
  Matrix sigmas = sigma_factor_ * rng.gaussian_matrix(m_, ensemble_size);
  return PerturbationDraw::from_samples(std::move(deltas), std::move(sigmas));
}

Vector solve_map_primal(const LinearProblem& p) {
  const auto sigma_llt = cholesky_or_throw(p.sigma, "solve_map_primal: Sigma is not SPD");
  Eigen::LLT<Matrix> c_llt(p.prior.cov());
  if (c_llt.info() != Eigen::Success)
    throw Error(
        "solve_map_primal: prior covariance is singular; use "
        "solve_dual_lambda / map_from_dual instead");
  const Eigen::Index n = p.state_dimension();
  const Matrix sigma_inv_a = sigma_llt.solve(p.a);
  Matrix lhs = p.a.transpose() * sigma_inv_a + c_llt.solve(Matrix::Identity(n, n));
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
  const Vector rhs =
      p.a.transpose() * sigma_llt.solve(p.d) + c_llt.solve(p.prior.mean());
  Eigen::LDLT<Matrix> lhs_ldlt(lhs);
  if (lhs_ldlt.info() != Eigen::Success)
    throw Error("solve_map_primal: normal equations factorization failed");
  return lhs_ldlt.solve(rhs);
}

Vector solve_dual_lambda(const LinearProblem& p) {
  Matrix b = p.sigma + p.a * p.prior.cov() * p.a.transpose();
  b = 0.5 * (b + b.transpose()).eval();
  const auto llt = cholesky_or_throw(b, "solve_dual_lambda: Sigma + A C A^T is not SPD");
  const Vector rhs = p.a * p.prior.mean() - p.d;
  Vector lambda = llt.solve(rhs);
  // One refinement pass, then validate the residual contract.
  lambda += llt.solve(rhs - b * lambda);
  const double resid = (b * lambda - rhs).norm();
  const double scale = std::max(rhs.norm(), 1e-300);
  if (resid > 1e-10 * scale) {
    const double cond_est =
        infinity_norm(b) *
        infinity_norm(llt.solve(Matrix::Identity(b.rows(), b.cols())));
    std::ostringstream msg;
    msg << "solve_dual_lambda: residual " << resid / scale
        << " exceeds 1e-10 (condition estimate " << cond_est << ")";
    throw Error(msg.str());
  }
  return lambda;
}

Vector map_from_dual(const LinearProblem& p, const Vector& lambda) {
  if (lambda.size() != p.data_dimension())
    throw Error("map_from_dual: multiplier dimension mismatch");
  return p.prior.mean() - p.prior.cov() * (p.a.transpose() * lambda);
}

Vector solve_dual_saa(const LinearProblem& p, const PerturbationDraw& draw) {
  if (draw.deltas.rows() != p.state_dimension() ||
      draw.sigmas.rows() != p.data_dimension())
    throw Error("solve_dual_saa: draw dimensions do not match the problem");
  const Matrix a_omega = p.a * draw.omega;
  Matrix g = p.sigma + a_omega * a_omega.transpose();
  g = 0.5 * (g + g.transpose()).eval();
  const auto llt = cholesky_or_throw(g, "solve_dual_saa: randomized system is not SPD");
  const Vector rhs =
      p.a * (p.prior.mean() + draw.delta_bar) - (p.d + draw.sigma_bar);
  return llt.solve(rhs);
}

EnkfUpdate enkf_update(const LinearProblem& p, const PerturbationDraw& draw) {
  const Eigen::Index n_particles = draw.size();
  const double root_n = std::sqrt(static_cast<double>(n_particles));
  const Matrix a_omega = p.a * draw.omega;  // m x N
  Matrix g = p.sigma + a_omega * a_omega.transpose();
  g = 0.5 * (g + g.transpose()).eval();
  const auto llt = cholesky_or_throw(g, "enkf_update: randomized system is not SPD");

  // rhs_i = d + sigma_i - A(u0 + delta_i), with A*deltas = sqrt(N) * A*Omega.
  const Vector base = p.d - p.a * p.prior.mean();
  Matrix rhs = draw.sigmas - root_n * a_omega;
  rhs.colwise() += base;
  const Matrix w = llt.solve(rhs);

  EnkfUpdate update;
  update.per_particle = draw.deltas + draw.omega * (a_omega.transpose() * w);
  update.per_particle.colwise() += p.prior.mean();
  update.mean = update.per_particle.rowwise().mean();
  return update;
}

Vector enkf_mean_update(const LinearProblem& p, const PerturbationDraw& draw) {
  const Matrix a_omega = p.a * draw.omega;
  Matrix g = p.sigma + a_omega * a_omega.transpose();
  g = 0.5 * (g + g.transpose()).eval();
  const auto llt = cholesky_or_throw(g, "enkf_mean_update: randomized system is not SPD");
  const Vector rhs =
      p.d + draw.sigma_bar - p.a * (p.prior.mean() + draw.delta_bar);
  const Vector w = llt.solve(rhs);
  return p.prior.mean() + draw.delta_bar +
         draw.omega * (a_omega.transpose() * w);
}

}  // namespace enki
