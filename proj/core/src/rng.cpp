#include "enki/rng.hpp"

#include <cmath>

namespace enki {
namespace {

// splitmix64 finalizer; mixes seed words into decorrelated engine seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  return mix(mix(seed) ^ stream) ^ mix(index);
}

RngStream::RngStream(std::uint64_t seed) : engine_(mix(seed)) {}

RngStream RngStream::derived(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) {
  RngStream out(0);
  out.engine_.seed(mix(derive_seed(seed, stream, index)));
  return out;
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  // Box-Muller, cosine branch only: two uniforms per normal, no cached state.
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
  // Rejection sampling for an unbiased index.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t value;
  do {
    value = engine_();
  } while (value >= limit);
  return value % bound;
}

Eigen::VectorXd RngStream::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
  return v;
}

Eigen::MatrixXd RngStream::gaussian_matrix(Eigen::Index rows,
                                           Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gaussian();
  return m;
}

}  // namespace enki
