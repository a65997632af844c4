#pragma once

#include <vector>

#include "enki/types.hpp"

namespace enki {

struct L96Config {
  Eigen::Index n = 100;
  double forcing = 8.0;
  double t_final = 0.3;
  double step = 0.01;
  std::vector<Eigen::Index> obs_indices;  // repeats allowed

  void validate() const;  // step must divide t_final within 1e-12
};

/// d v_k / dt = v_{k-1} (v_{k+1} - v_{k-2}) - v_k + F, indices cyclic.
Vector lorenz96_rhs(const Vector& v, double forcing);

/// Full state at t_final, classical fourth-order Runge-Kutta. Throws
/// "L96 blow-up" when the state leaves the finite range.
Vector lorenz96_integrate(const Vector& v0, const L96Config& cfg);

/// Observed components of the state at t_final.
Vector lorenz96_forward(const Vector& v0, const L96Config& cfg);

ForwardOperator lorenz96_operator(L96Config cfg);

}  // namespace enki
