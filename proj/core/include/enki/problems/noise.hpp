#pragma once

#include <cstdint>

#include "enki/linalg.hpp"

namespace enki {

/// Additive Gaussian contamination with sigma = percent * RMS(d);
/// deterministic for a fixed seed.
Vector add_noise(const Vector& d, double percent, std::uint64_t seed);

double rms(const Vector& d);

}  // namespace enki
