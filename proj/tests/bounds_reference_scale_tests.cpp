#include <doctest.h>

#include "enki/bounds.hpp"
#include "enki/problems/setup.hpp"

using namespace enki;

// Validity-range scale check on the reference-size deconvolution setup
// (n = m = 1000, eta = 0.99, Sigma = 0.01 I). The published value for this
// configuration is 2e-3; the exact number depends on the drawn data, so the
// assertion is an order-of-magnitude window around it.
TEST_CASE("eps validity limit at reference deconvolution scale") {
  DeconvParams params;
  params.n = 1000;
  const InverseProblem problem = make_deconv_problem(params, 1);
  const LinearProblem lp = to_linear_problem(problem, 0.01);
  const ProblemNorms norms = ProblemNorms::compute(lp);
  const double limit = bound_eps_max(norms, 0.99, false);
  MESSAGE("eps_max = ", limit);
  CHECK(limit >= 2e-4);
  CHECK(limit <= 2e-2);

  // The corollary-mode range never exceeds the exact one.
  CHECK(bound_eps_max(norms, 0.99, true) <= limit * (1.0 + 1e-12));
}
