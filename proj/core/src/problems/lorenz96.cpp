#include "enki/problems/lorenz96.hpp"

#include <cmath>
#include <utility>

#include "enki/error.hpp"

namespace enki {

void L96Config::validate() const {
  if (n < 4) throw Error("L96Config: need at least four states");
  if (step <= 0.0 || t_final <= 0.0)
    throw Error("L96Config: step and final time must be positive");
  const double steps = t_final / step;
  if (std::abs(steps - std::round(steps)) > 1e-12 * std::max(1.0, steps))
    throw Error("L96Config: step must divide the final time");
  for (const auto idx : obs_indices)
    if (idx < 0 || idx >= n)
      throw Error("L96Config: observation index out of range");
}

Vector lorenz96_rhs(const Vector& v, double forcing) {
  const Eigen::Index n = v.size();
  Vector dv(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double prev = v[(k - 1 + n) % n];
    const double prev2 = v[(k - 2 + n) % n];
    const double next = v[(k + 1) % n];
    dv[k] = prev * (next - prev2) - v[k] + forcing;
  }
  return dv;
}

Vector lorenz96_integrate(const Vector& v0, const L96Config& cfg) {
  cfg.validate();
  if (v0.size() != cfg.n) throw Error("lorenz96_integrate: state dimension mismatch");
  const auto n_steps = static_cast<long>(std::llround(cfg.t_final / cfg.step));
  const double h = cfg.step;
  Vector v = v0;
  for (long s = 0; s < n_steps; ++s) {
    const Vector k1 = lorenz96_rhs(v, cfg.forcing);
    const Vector k2 = lorenz96_rhs(v + 0.5 * h * k1, cfg.forcing);
    const Vector k3 = lorenz96_rhs(v + 0.5 * h * k2, cfg.forcing);
    const Vector k4 = lorenz96_rhs(v + h * k3, cfg.forcing);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!v.allFinite()) throw Error("L96 blow-up");
  }
  return v;
}

Vector lorenz96_forward(const Vector& v0, const L96Config& cfg) {
  const Vector state = lorenz96_integrate(v0, cfg);
  Vector out(static_cast<Eigen::Index>(cfg.obs_indices.size()));
  for (std::size_t r = 0; r < cfg.obs_indices.size(); ++r)
    out[static_cast<Eigen::Index>(r)] = state[cfg.obs_indices[r]];
  return out;
}

ForwardOperator lorenz96_operator(L96Config cfg) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(cfg.obs_indices.size());
  const Eigen::Index n = cfg.n;
  return ForwardOperator::nonlinear(
      m, n, [cfg = std::move(cfg)](const Vector& v0) {
        return lorenz96_forward(v0, cfg);
      });
}

}  // namespace enki
