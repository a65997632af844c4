#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "enki/dual.hpp"

namespace enki {

/// Constants entering the non-asymptotic error bound. c scales the error
/// event (e_u <= c * eps); c1 and c2 sit in the tail exponents; eta in (0,1)
/// sets the perturbation margin; mu is the noise scale when Sigma = mu I.
struct BoundConstants {
  double c = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double eta = 0.99;
  double mu = 0.0;
};

/// Components of the error decomposition
/// e_u <= e_delta + ||A^T|| e_lambda + ||A^T|| e_omega ||lambda*||
/// (all infinity norms).
struct ErrorBreakdown {
  double e_u = 0.0;
  double e_delta = 0.0;
  double e_lambda = 0.0;
  double e_omega = 0.0;
};

ErrorBreakdown error_breakdown(const LinearProblem& p,
                               const PerturbationDraw& draw);

/// Infinity-norm data of a linear problem, cached once for the tail
/// formulas. kappa_b is the condition number of B = Sigma + A C A^T under
/// the induced infinity norm.
struct ProblemNorms {
  double c_norm = 0.0;           // ||C||
  double c_sqrt_norm = 0.0;      // ||C^{1/2}||
  double sigma_sqrt_norm = 0.0;  // ||Sigma^{1/2}||
  double a_norm = 0.0;           // ||A||
  double at_norm = 0.0;          // ||A^T||
  double b_norm = 0.0;           // ||B||
  double b_inv_norm = 0.0;       // ||B^{-1}||
  double residual_norm = 0.0;    // ||A u0 - d||
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double mu = 0.0;  // Sigma(0,0); meaningful when Sigma = mu I

  static ProblemNorms compute(const LinearProblem& p);
  /// Prior/noise norms only (a_norm, b_norm etc. stay zero); enough for the
  /// sample-size planner, which never touches the forward map.
  static ProblemNorms from_prior(const GaussianMeasure& prior, double mu,
                                 Eigen::Index m);
  double kappa_b() const { return b_norm * b_inv_norm; }
};

/// The five tail terms at accuracy eps and ensemble size N. dim(C) = n and
/// dim(Sigma) = m in the exponents.
struct TailTerms {
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  double e5 = 0.0;
};

TailTerms tail_terms(double eps, double n_samples, const BoundConstants& k,
                     const ProblemNorms& norms);

/// Probability lower bound 1 - 6 E3 - E4 - E5 - E1 - 2 E2; may be negative
/// (vacuous). Throws when eps exceeds the bound's validity range.
double bound_probability(double eps, double n_samples, const BoundConstants& k,
                         const ProblemNorms& norms);

/// Upper limit of the eps validity range. corollary_mode uses the Sigma=mu*I
/// simplification and avoids kappa(B).
double bound_eps_max(const ProblemNorms& norms, double eta,
                     bool corollary_mode);

/// Error constant c = 1 + ||A^T|| (nu1 + nu2); nu1 is evaluated in expanded
/// form so that a zero prior-mean residual cancels algebraically instead of
/// producing 0/0.
double bound_error_constant(const ProblemNorms& norms, double eta,
                            bool corollary_mode);

struct SampleSizePlan {
  long long n_min = 0;
  std::array<double, 5> terms{};  // per-term sample requirements
  int argmax = 0;
};

/// Smallest ensemble size guaranteeing the bound holds with probability
/// p_target at accuracy eps, given c_m = max(1/c2, c1).
SampleSizePlan plan_sample_size(double eps, double p_target,
                                const ProblemNorms& norms, double c_m);

/// e_u samples over independent perturbation draws; trial t uses the
/// derived stream (seed, N, t), so results are order-independent and
/// reproducible. Values are returned in trial order.
std::vector<double> simulate_error_samples(const LinearProblem& p,
                                           int ensemble_size, int trials,
                                           std::uint64_t seed);

/// Fraction of trials with e_u <= c * eps.
double empirical_probability(const LinearProblem& p, int ensemble_size,
                             double eps, double c, int trials,
                             std::uint64_t seed);

struct BoundGridResult {
  std::vector<int> ensemble_sizes;
  std::vector<double> eps_values;
  Matrix empirical;    // probabilities in [0, 1]
  Matrix theoretical;  // may be <= 0 (vacuous)
  int trials = 0;
  std::uint64_t seed = 0;
};

/// Raw material for the constants fit: e_u samples per ensemble size, the
/// anchor accuracy used for the objective, and the accuracy grid on which
/// the dominance constraint is enforced.
struct FitInput {
  std::vector<int> ensemble_sizes;
  std::vector<std::vector<double>> error_samples;
  double anchor_eps = 0.0;
  std::vector<double> validation_eps;
};

/// Fits (c, c1, c2) by log-parameterized coordinate descent with random
/// restarts: minimizes the squared empirical/theoretical gap at the anchor
/// accuracy subject to theoretical <= empirical on the whole validation
/// grid. Always feasible since large c1 / small c2 make the bound vacuous.
BoundConstants fit_bound_constants(const FitInput& input,
                                   const ProblemNorms& norms, double eta,
                                   std::uint64_t seed);

/// Evaluates both probability surfaces on the (N, eps) grid with fitted
/// constants.
BoundGridResult evaluate_bound_grid(const FitInput& input,
                                    const BoundConstants& constants,
                                    const ProblemNorms& norms,
                                    std::uint64_t seed);

}  // namespace enki
