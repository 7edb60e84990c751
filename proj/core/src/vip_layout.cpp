#include "vcc/vip_layout.hpp"

#include <algorithm>
#include <limits>

namespace vcc {

std::size_t next_power_of(std::size_t n, std::size_t k) {
  if (k < 2) throw InvalidArgument("branching factor must be at least 2");
  std::size_t p = 1;
  while (p < n) {
    if (p > std::numeric_limits<std::size_t>::max() / k) {
      throw InvalidArgument("next_power_of: overflow");
    }
    p *= k;
  }
  return p;
}

bool is_power_of(std::size_t n, std::size_t k) {
  if (n == 0 || k < 2) return false;
  while (n % k == 0) n /= k;
  return n == 1;
}

std::size_t exact_log(std::size_t n, std::size_t k) {
  if (!is_power_of(n, k)) {
    throw InvalidArgument(std::to_string(n) + " is not a power of " + std::to_string(k));
  }
  std::size_t levels = 0;
  while (n > 1) {
    n /= k;
    ++levels;
  }
  return levels;
}

template <std::floating_point T>
PartitionedSequence<T> reorder(const BasicMatrix<T>& x, const std::vector<bool>& vip_mask,
                              std::size_t k) {
  if (k < 2) throw InvalidArgument("reorder: k must be at least 2");
  if (vip_mask.size() != x.rows()) {
    throw ShapeError("reorder: mask length " + std::to_string(vip_mask.size()) +
                     " for sequence " + x.shape());
  }
  const std::size_t n_p =
      static_cast<std::size_t>(std::count(vip_mask.begin(), vip_mask.end(), true));
  if (n_p == 0) throw InvalidArgument("reorder: no VIP tokens");
  if (n_p >= x.rows()) throw InvalidArgument("reorder: every token is a VIP token");

  VipLayout layout;
  layout.n = x.rows();
  layout.n_p = n_p;
  layout.k = k;
  const std::size_t real = x.rows() - n_p;
  layout.n_c = next_power_of(real, k);
  layout.pad_count = layout.n_c - real;
  layout.pad_mask.assign(layout.n_c, false);
  std::fill(layout.pad_mask.begin() + static_cast<std::ptrdiff_t>(real),
            layout.pad_mask.end(), true);
  layout.permutation.resize(x.rows());

  PartitionedSequence<T> out{BasicMatrix<T>(n_p, x.cols()),
                             BasicMatrix<T>(layout.n_c, x.cols()), {}};
  std::size_t next_vip = 0;
  std::size_t next_rest = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    if (vip_mask[i]) {
      std::copy(src.begin(), src.end(), out.vip.row(next_vip).begin());
      layout.permutation[i] = next_vip++;
    } else {
      std::copy(src.begin(), src.end(), out.rest.row(next_rest).begin());
      layout.permutation[i] = n_p + next_rest++;
    }
  }
  out.layout = std::move(layout);
  return out;
}

template <std::floating_point T>
BasicMatrix<T> restore(const BasicMatrix<T>& vip, const BasicMatrix<T>& rest,
                       const VipLayout& layout) {
  if (vip.rows() != layout.n_p || rest.rows() != layout.n_c || vip.cols() != rest.cols() ||
      layout.permutation.size() != layout.n) {
    throw ShapeError("restore: P " + vip.shape() + " and C " + rest.shape() +
                     " do not match layout (n_p=" + std::to_string(layout.n_p) +
                     ", n_c=" + std::to_string(layout.n_c) + ")");
  }
  BasicMatrix<T> out(layout.n, vip.cols());
  for (std::size_t i = 0; i < layout.n; ++i) {
    const std::size_t slot = layout.permutation[i];
    auto src = slot < layout.n_p ? vip.row(slot) : rest.row(slot - layout.n_p);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template PartitionedSequence<float> reorder(const BasicMatrix<float>&,
                                            const std::vector<bool>&, std::size_t);
template PartitionedSequence<double> reorder(const BasicMatrix<double>&,
                                             const std::vector<bool>&, std::size_t);
template BasicMatrix<float> restore(const BasicMatrix<float>&, const BasicMatrix<float>&,
                                    const VipLayout&);
template BasicMatrix<double> restore(const BasicMatrix<double>&,
                                     const BasicMatrix<double>&, const VipLayout&);

}  // namespace vcc
