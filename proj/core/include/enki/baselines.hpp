#pragma once

#include "enki/inversion.hpp"

namespace enki {

/// Power-law inflation factor k^beta, defined for k >= 1.
double chada_alpha(int k, double beta);

/// Power-law inflation policy. The run loop counts iterations from 0; the
/// policy evaluates chada_alpha(k + 1, beta) so the first step uses factor 1.
class ChadaPolicy : public AlphaPolicy {
 public:
  explicit ChadaPolicy(double beta = 0.8);
  Vector alphas(int k, const ResidualStats& stats,
                const NoiseModel& noise) override;

 private:
  double beta_;
};

struct AndersonBracket {
  double lo = 1e-6;
  double hi = 1e4;
};

/// MAP-estimated inflation factor: minimizes
///   (1/2) r^T S(a)^{-1} r + (1/2) log det S(a) + (1/2)(a - 1)^2
/// with S(a) = mu I + a C_pp, by a coarse log-spaced scan of the bracket
/// followed by golden-section refinement. Objective terms come from one
/// Cholesky factorization per candidate (solve plus log-det from the
/// diagonal).
double anderson_alpha(const Matrix& output_cov, const Vector& r_bar, double mu,
                      const AndersonBracket& bracket = {});
double anderson_alpha(const ResidualStats& stats, double mu,
                      const AndersonBracket& bracket = {});

class AndersonPolicy : public AlphaPolicy {
 public:
  explicit AndersonPolicy(AndersonBracket bracket = {});
  Vector alphas(int k, const ResidualStats& stats,
                const NoiseModel& noise) override;

 private:
  AndersonBracket bracket_;
};

/// Momentum-accelerated inversion: each particle is extrapolated by
/// (k-1)/(k+2) times its last displacement before a vanilla step. The k = 0
/// step is plain (no history yet), and the k = 1 coefficient is zero.
RunResult run_nesterov(const Ensemble& initial, const ForwardOperator& op,
                       const NoiseModel& noise, const Vector& d,
                       const Termination& term, const RunOptions& options = {});

}  // namespace enki
