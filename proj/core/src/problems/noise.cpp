#include "enki/problems/noise.hpp"

#include <cmath>

#include "enki/error.hpp"
#include "enki/rng.hpp"

namespace enki {

double rms(const Vector& d) {
  if (d.size() == 0) throw Error("rms: empty vector");
  return d.norm() / std::sqrt(static_cast<double>(d.size()));
}

Vector add_noise(const Vector& d, double percent, std::uint64_t seed) {
  if (percent < 0.0) throw Error("add_noise: percent must be nonnegative");
  if (percent == 0.0) return d;
  RngStream rng(seed);
  const double sigma = percent * rms(d);
  return d + sigma * rng.gaussian_vector(d.size());
}

}  // namespace enki
