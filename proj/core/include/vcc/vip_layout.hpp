#pragma once

#include <cstddef>
#include <vector>

#include "vcc/matrix.hpp"

namespace vcc {

/// Smallest power of `k` that is >= n (1 for n <= 1).
std::size_t next_power_of(std::size_t n, std::size_t k);
bool is_power_of(std::size_t n, std::size_t k);
/// log_k(n) for an exact power n.
std::size_t exact_log(std::size_t n, std::size_t k);

/// Bookkeeping that moves VIP tokens to the head of a sequence and pads the
/// remaining tokens to a power of k.
struct VipLayout {
  std::size_t n = 0;    ///< original length
  std::size_t n_p = 0;  ///< VIP tokens
  std::size_t n_c = 0;  ///< non-VIP rows after padding, a power of k
  std::size_t k = 2;
  std::size_t pad_count = 0;
  /// permutation[i] is the row of original token i in the stacked [P; C]
  /// (VIP rows first, then non-VIP rows, pads excluded).
  std::vector<std::size_t> permutation;
  /// One flag per row of C; exactly the last pad_count rows are set.
  std::vector<bool> pad_mask;

  /// Number of non-pad rows of C.
  std::size_t real_rows() const noexcept { return n_c - pad_count; }
};

template <std::floating_point T>
struct PartitionedSequence {
  BasicMatrix<T> vip;   ///< P, n_p × d
  BasicMatrix<T> rest;  ///< C, n_c × d, zero pad rows at the end
  VipLayout layout;
};

/// Stable partition of `x` by `vip_mask`. Requires at least one VIP and one
/// non-VIP token and k >= 2.
template <std::floating_point T>
PartitionedSequence<T> reorder(const BasicMatrix<T>& x, const std::vector<bool>& vip_mask,
                              std::size_t k);

/// Inverse of reorder(): drops pad rows and returns rows to original order.
template <std::floating_point T>
BasicMatrix<T> restore(const BasicMatrix<T>& vip, const BasicMatrix<T>& rest,
                       const VipLayout& layout);

}  // namespace vcc
