#pragma once

#include <concepts>
#include <cstdint>
#include <optional>

#include "vcc/matrix.hpp"

namespace vcc {

/// Counter-based generator: the k-th draw is splitmix64(seed, k), so streams
/// are reproducible bit-for-bit across platforms. Gaussians use Box–Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in the open interval (0, 1).
  double uniform() noexcept;
  double gaussian() noexcept;
  /// Uniform in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Independent generator for sub-stream `stream`.
  Rng fork(std::uint64_t stream) const noexcept;

  template <std::floating_point T>
  BasicMatrix<T> gaussian_matrix(std::size_t rows, std::size_t cols, T stddev = T(1)) {
    BasicMatrix<T> m(rows, cols);
    for (T& v : m.values()) v = static_cast<T>(gaussian()) * stddev;
    return m;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

}  // namespace vcc
