#pragma once

#include <cstdint>
#include <string>

#include "enki/dual.hpp"
#include "enki/problems/deconvolution.hpp"
#include "enki/problems/heat2d.hpp"
#include "enki/problems/lorenz96.hpp"
#include "enki/problems/noise.hpp"

namespace enki {

/// A fully assembled benchmark instance: forward map, prior for the
/// ensembles, ground truth and the contaminated observation.
struct InverseProblem {
  std::string name;
  ForwardOperator op;
  GaussianMeasure prior;
  Vector truth;
  Vector data;
  double noise_sigma = 0.0;
  bool is_linear = false;
};

struct DeconvParams {
  Eigen::Index n = 100;  // = m
  double kernel_a = 0.235;
  double length_scale = 0.5;
  double periodicity = 20.0;
  double variance = 1e-4;
  double noise_percent = 0.02;
};

struct Lorenz96Params {
  Eigen::Index n = 100;
  Eigen::Index m = 100;  // observation count; index repeats allowed
  double forcing = 8.0;
  double t_final = 0.3;
  double step = 0.01;
  double prior_mean = 2.0;
  double length_scale = 0.5;
  double periodicity = 20.0;
  double truth_jitter = 0.01;  // small perturbation of the sampled truth
  double noise_percent = 0.02;
};

struct Heat2dParams {
  Eigen::Index s = 24;   // n = s^2
  Eigen::Index m = 120;  // distinct observation nodes
  double forcing = 1.0;
  FaceAverage face = FaceAverage::arithmetic;
  double noise_percent = 0.02;
};

InverseProblem make_deconv_problem(const DeconvParams& params,
                                   std::uint64_t seed);
InverseProblem make_lorenz96_problem(const Lorenz96Params& params,
                                     std::uint64_t seed);
InverseProblem make_heat2d_problem(const Heat2dParams& params,
                                   std::uint64_t seed);

/// Linear single-step problem for the randomized-update analysis, with
/// Sigma = mu * I (the same noise model the iterative runs use).
LinearProblem to_linear_problem(const InverseProblem& problem, double mu);

/// N prior samples, drawn from the stream derived for ensembles.
Ensemble draw_initial_ensemble(const InverseProblem& problem,
                               Eigen::Index ensemble_size, std::uint64_t seed);

namespace streams {
// Purpose tags for derived random streams; part of the determinism contract.
constexpr std::uint64_t kTruth = 1;
constexpr std::uint64_t kObservationNoise = 2;
constexpr std::uint64_t kObsIndices = 3;
constexpr std::uint64_t kEnsemble = 4;
constexpr std::uint64_t kTruthJitter = 5;
}  // namespace streams

}  // namespace enki
