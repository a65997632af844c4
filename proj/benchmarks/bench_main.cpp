#include <benchmark/benchmark.h>

#include "enki/correction.hpp"
#include "enki/dual.hpp"
#include "enki/problems/setup.hpp"

namespace {

using namespace enki;

InverseProblem deconv_problem() {
  return make_deconv_problem(DeconvParams{}, 7);
}

void BM_EnkiStepLinear(benchmark::State& state) {
  const InverseProblem problem = deconv_problem();
  const auto n_particles = static_cast<Eigen::Index>(state.range(0));
  const Ensemble ensemble = draw_initial_ensemble(problem, n_particles, 7);
  const NoiseModel noise(0.01, problem.op.output_dimension());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        enki_step(ensemble, problem.op, noise, problem.data));
  }
}
BENCHMARK(BM_EnkiStepLinear)->Arg(20)->Arg(100);

void BM_EnkfUpdate(benchmark::State& state) {
  const InverseProblem problem = deconv_problem();
  const LinearProblem lp = to_linear_problem(problem, 0.01);
  RngStream rng(11);
  const PerturbationDraw draw =
      PerturbationDraw::sample(lp, state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enkf_update(lp, draw));
  }
}
BENCHMARK(BM_EnkfUpdate)->Arg(10)->Arg(100);

void BM_CorrectionFactor(benchmark::State& state) {
  const InverseProblem problem = deconv_problem();
  const Ensemble ensemble = draw_initial_ensemble(problem, 20, 7);
  const ResidualStats stats(ensemble, problem.op, problem.data);
  const double delta = correction_regularizer(
      1, stats, DeltaParams{}, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(correction_taylor_step(
        1.0, stats.output_cov(), stats.r_bar(), delta, 0.01));
  }
}
BENCHMARK(BM_CorrectionFactor);

void BM_Lorenz96Forward(benchmark::State& state) {
  L96Config cfg;
  cfg.n = 100;
  for (Eigen::Index i = 0; i < 100; ++i) cfg.obs_indices.push_back(i);
  RngStream rng(3);
  const Vector v0 = Vector::Constant(100, 2.0) + rng.gaussian_vector(100);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lorenz96_forward(v0, cfg));
  }
}
BENCHMARK(BM_Lorenz96Forward);

void BM_Heat2dForward(benchmark::State& state) {
  const Grid2D grid{24};
  std::vector<Eigen::Index> obs;
  for (Eigen::Index i = 0; i < grid.size(); i += 5) obs.push_back(i);
  RngStream rng(5);
  const LaplaceSquaredPrior prior(grid);
  const Vector u = prior.sample(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(heat2d_forward(grid, u, obs));
  }
}
BENCHMARK(BM_Heat2dForward);

}  // namespace

BENCHMARK_MAIN();
