#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "vcc/components.hpp"
#include "vcc/matrix.hpp"

namespace vcc {

struct RetrievalStats {
  std::size_t retrievals = 0;
  std::size_t subtractions = 0;
};

struct UpdateStats {
  /// Delta and root rows rewritten.
  std::size_t writes = 0;
  /// The rewritten nodes; the root is reported as {n_c, 1}.
  std::vector<Component> written;
};

/// Multi-resolution store of an n_c × d sequence: the root mean c_1^{n_c}
/// plus, for every other node, Δc_x^s = c_{⌈x/k⌉}^{ks} − c_x^s.
///
/// Storage is one contiguous array per level; level ℓ holds the n_c/k^ℓ
/// deltas of segment size k^ℓ. The parent of (s, x) is (ks, ⌈x/k⌉).
///
/// A tree has a single writer. Concurrent const access is safe while no
/// apply_update() is in flight.
template <std::floating_point T>
class SeqTree {
 public:
  SeqTree() = default;

  /// O(n_c·d). Throws InvalidArgument unless rows() is a power of k.
  static SeqTree build(const BasicMatrix<T>& rows, std::size_t k);

  std::size_t leaves() const noexcept { return n_c_; }
  std::size_t branching() const noexcept { return k_; }
  std::size_t dim() const noexcept { return d_; }
  /// log_k(n_c): number of delta levels.
  std::size_t depth() const noexcept { return depth_; }
  /// Root plus all delta nodes.
  std::size_t node_count() const noexcept;

  std::span<const T> root() const noexcept { return root_; }
  /// Δc_x^s for a non-root component.
  std::span<const T> delta(const Component& c) const;

  /// c_x^s = root − Σ deltas on the path, at most depth() subtractions.
  std::vector<T> retrieve(const Component& c, RetrievalStats* stats = nullptr) const;
  /// c of `child` from its parent's already known mean: one subtraction.
  void child_mean(std::span<const T> parent_mean, const Component& child, std::span<T> out,
                  RetrievalStats* stats = nullptr) const;

  /// Turns the tree into the tree of the sequence whose J-compressed rows are
  /// `new_rows` (row i for set[i]) while every row inside a component keeps
  /// its offset from the component mean. Only nodes of J and their ancestors
  /// are rewritten.
  UpdateStats apply_update(const ComponentSet& set, const BasicMatrix<T>& new_rows);

  /// All leaves, O(n_c·d).
  BasicMatrix<T> materialize() const;

  // Snapshot: "VCCT", u32 version, u64 n_c, u64 k, u64 d, root (d reals),
  // then levels from s = n_c/k down to s = 1, each n_c/s rows of d reals in
  // x order. Little-endian, reals as binary64.
  void write(std::ostream& out) const;
  static SeqTree read(std::istream& in);

  friend bool operator==(const SeqTree&, const SeqTree&) = default;

 private:
  std::size_t level_of(const Component& c) const;
  T* delta_row(std::size_t level, std::size_t index) {
    return deltas_[level].data() + (index - 1) * d_;
  }
  const T* delta_row(std::size_t level, std::size_t index) const {
    return deltas_[level].data() + (index - 1) * d_;
  }

  std::size_t n_c_ = 0;
  std::size_t k_ = 2;
  std::size_t d_ = 0;
  std::size_t depth_ = 0;
  std::vector<T> root_;
  std::vector<std::vector<T>> deltas_;
};

}  // namespace vcc
