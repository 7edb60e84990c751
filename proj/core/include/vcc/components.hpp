#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "vcc/matrix.hpp"

namespace vcc {

/// The x-th segment of length s of the non-VIP rows (x is 1-based), i.e.
/// zero-based rows [s·(x-1), s·x).
struct Component {
  std::size_t size = 1;
  std::size_t index = 1;

  std::size_t first() const noexcept { return size * (index - 1); }
  std::size_t last() const noexcept { return size * index; }

  Component parent(std::size_t k) const noexcept { return {size * k, (index - 1) / k + 1}; }
  /// j in [0, k)
  Component child(std::size_t k, std::size_t j) const noexcept {
    return {size / k, (index - 1) * k + j + 1};
  }

  friend auto operator<=>(const Component&, const Component&) = default;
};

/// Throws InvalidArgument unless `c` is a segment of a length-n_c sequence
/// with a power-of-k size.
void validate_component(const Component& c, std::size_t n_c, std::size_t k);

/// b_x^s: 1/s on the component's rows, 0 elsewhere.
template <std::floating_point T>
std::vector<T> component_vector(const Component& c, std::size_t n_c);

/// Mean of the component's rows of `rows`.
template <std::floating_point T>
std::vector<T> segment_mean(const BasicMatrix<T>& rows, const Component& c);

/// Components whose supports are disjoint and cover all n_c rows, stored in
/// positional order.
class ComponentSet {
 public:
  ComponentSet() = default;
  /// Sorts by position; throws InvalidArgument unless the cover is exact.
  ComponentSet(std::vector<Component> items, std::size_t n_c, std::size_t k);

  static ComponentSet root(std::size_t n_c, std::size_t k);
  static ComponentSet singletons(std::size_t n_c, std::size_t k);

  std::span<const Component> components() const noexcept { return items_; }
  const Component& operator[](std::size_t i) const { return items_[i]; }
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t n_c() const noexcept { return n_c_; }
  std::size_t k() const noexcept { return k_; }

  /// Segment sizes in row order (the diagonal of D).
  std::vector<std::size_t> multiplicities() const;
  /// Position of `c` in row order, or size() when absent.
  std::size_t find(const Component& c) const;

  friend bool operator==(const ComponentSet&, const ComponentSet&) = default;

 private:
  std::vector<Component> items_;
  std::size_t n_c_ = 0;
  std::size_t k_ = 2;
};

/// S_c: one row b_x^s per component (|J| × n_c).
template <std::floating_point T>
BasicMatrix<T> dense_S(const ComponentSet& set);
/// S_cᵀ D (n_c × |J|).
template <std::floating_point T>
BasicMatrix<T> dense_S_pinv(const ComponentSet& set);

/// Text dump: one "s x" line per component in row order.
void write_plan(std::ostream& out, const ComponentSet& set);
/// Parses write_plan() output. Throws ConfigError with the offending line.
ComponentSet read_plan(std::istream& in, std::size_t n_c, std::size_t k);

}  // namespace vcc
