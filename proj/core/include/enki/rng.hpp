#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace enki {

/// Mixes (seed, stream, index) into a single decorrelated seed word.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

/// Deterministic random stream. The raw engine is the standards-specified
/// mt19937_64 and the Gaussian transform is a fixed Box-Muller, so a given
/// (seed, stream, index) triple produces the same values on every platform.
/// Derived streams let independent workers (trials, particles) draw without
/// sharing state, keeping parallel results order-independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Stream decorrelated from `seed` by (stream, index); used for per-trial
  /// and per-purpose substreams.
  static RngStream derived(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index = 0);

  /// Uniform draw in [0, 1).
  double uniform();

  /// Standard normal draw.
  double gaussian();

  /// Uniform integer in [0, bound).
  std::uint64_t uniform_index(std::uint64_t bound);

  Eigen::VectorXd gaussian_vector(Eigen::Index n);
  /// Column-major fill; the draw order is part of the determinism contract.
  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
};

}  // namespace enki
