#include "enki/problems/setup.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "enki/error.hpp"

namespace enki {
namespace {

Vector contaminate(const Vector& clean, double percent, std::uint64_t seed,
                   double* sigma_out) {
  *sigma_out = percent * rms(clean);
  return add_noise(clean, percent,
                   derive_seed(seed, streams::kObservationNoise));
}

}  // namespace

InverseProblem make_deconv_problem(const DeconvParams& params,
                                   std::uint64_t seed) {
  const Grid1D grid{params.n};
  Matrix a = deconv_operator(grid, params.kernel_a);
  GaussianMeasure prior = GaussianMeasure::from_cov(
      Vector::Zero(params.n),
      exp_sine_squared_cov(grid.points(), params.length_scale,
                           params.periodicity, params.variance));

  RngStream truth_rng = RngStream::derived(seed, streams::kTruth);
  Vector truth = prior.sample(truth_rng);
  const Vector clean = a * truth;
  double sigma = 0.0;
  Vector data = contaminate(clean, params.noise_percent, seed, &sigma);
  return InverseProblem{"deconv",
                        ForwardOperator::linear(std::move(a)),
                        std::move(prior),
                        std::move(truth),
                        std::move(data),
                        sigma,
                        true};
}

InverseProblem make_lorenz96_problem(const Lorenz96Params& params,
                                     std::uint64_t seed) {
  L96Config cfg;
  cfg.n = params.n;
  cfg.forcing = params.forcing;
  cfg.t_final = params.t_final;
  cfg.step = params.step;
  RngStream index_rng = RngStream::derived(seed, streams::kObsIndices);
  cfg.obs_indices.reserve(static_cast<std::size_t>(params.m));
  for (Eigen::Index r = 0; r < params.m; ++r)
    cfg.obs_indices.push_back(static_cast<Eigen::Index>(
        index_rng.uniform_index(static_cast<std::uint64_t>(params.n))));
  cfg.validate();

  // Prior over the cyclic sites, indexed by grid position.
  const Vector sites =
      Vector::LinSpaced(params.n, 0.0, static_cast<double>(params.n - 1));
  GaussianMeasure prior = GaussianMeasure::from_cov(
      Vector::Constant(params.n, params.prior_mean),
      exp_sine_squared_cov(sites, params.length_scale, params.periodicity));

  RngStream truth_rng = RngStream::derived(seed, streams::kTruth);
  RngStream jitter_rng = RngStream::derived(seed, streams::kTruthJitter);
  Vector truth = prior.sample(truth_rng) +
                 params.truth_jitter * jitter_rng.gaussian_vector(params.n);
  const Vector clean = lorenz96_forward(truth, cfg);
  double sigma = 0.0;
  Vector data = contaminate(clean, params.noise_percent, seed, &sigma);
  return InverseProblem{"lorenz96",
                        lorenz96_operator(std::move(cfg)),
                        std::move(prior),
                        std::move(truth),
                        std::move(data),
                        sigma,
                        false};
}

InverseProblem make_heat2d_problem(const Heat2dParams& params,
                                   std::uint64_t seed) {
  const Grid2D grid{params.s};
  grid.validate();
  if (params.m > grid.size())
    throw Error("make_heat2d_problem: more observations than grid nodes");

  // Distinct observation nodes via a partial shuffle.
  RngStream index_rng = RngStream::derived(seed, streams::kObsIndices);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(grid.size()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (Eigen::Index r = 0; r < params.m; ++r) {
    const auto j = r + static_cast<Eigen::Index>(index_rng.uniform_index(
                           static_cast<std::uint64_t>(grid.size() - r)));
    std::swap(all[static_cast<std::size_t>(r)], all[static_cast<std::size_t>(j)]);
  }
  std::vector<Eigen::Index> obs(all.begin(), all.begin() + params.m);
  std::sort(obs.begin(), obs.end());

  const LaplaceSquaredPrior prior_builder(grid);
  GaussianMeasure prior = prior_builder.measure();

  RngStream truth_rng = RngStream::derived(seed, streams::kTruth);
  Vector truth = prior.sample(truth_rng);
  const Vector clean =
      heat2d_forward(grid, truth, obs, params.forcing, params.face);
  double sigma = 0.0;
  Vector data = contaminate(clean, params.noise_percent, seed, &sigma);
  return InverseProblem{"heat2d",
                        heat2d_operator(grid, std::move(obs), params.forcing,
                                        params.face),
                        std::move(prior),
                        std::move(truth),
                        std::move(data),
                        sigma,
                        false};
}

LinearProblem to_linear_problem(const InverseProblem& problem, double mu) {
  if (!problem.is_linear)
    throw Error("to_linear_problem: problem has a nonlinear forward map");
  const Eigen::Index m = problem.op.output_dimension();
  return LinearProblem::create(problem.op.matrix(), problem.prior,
                               mu * Matrix::Identity(m, m), problem.data);
}

Ensemble draw_initial_ensemble(const InverseProblem& problem,
                               Eigen::Index ensemble_size,
                               std::uint64_t seed) {
  if (ensemble_size < 1)
    throw Error("draw_initial_ensemble: ensemble size must be >= 1");
  RngStream rng = RngStream::derived(seed, streams::kEnsemble);
  Matrix particles(problem.prior.dimension(), ensemble_size);
  for (Eigen::Index i = 0; i < ensemble_size; ++i)
    particles.col(i) = problem.prior.sample(rng);
  return Ensemble(std::move(particles));
}

}  // namespace enki
