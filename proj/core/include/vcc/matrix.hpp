#pragma once

#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vcc/error.hpp"

namespace vcc {

/// Dense row-major matrix. Kernels in this header never mutate their inputs;
/// the `*_inplace` variants mutate their first argument only.
template <std::floating_point T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;

  BasicMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape());
    }
  }

  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows)
      : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  static BasicMatrix filled(std::size_t rows, std::size_t cols, T value) {
    return BasicMatrix(rows, cols, std::vector<T>(rows * cols, value));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  std::string shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixF = BasicMatrix<float>;

// Products.
template <std::floating_point T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
/// a · bᵀ without materializing the transpose.
template <std::floating_point T>
BasicMatrix<T> matmul_transposed(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <std::floating_point T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a);

// Elementwise.
template <std::floating_point T>
BasicMatrix<T> add(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <std::floating_point T>
BasicMatrix<T> subtract(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <std::floating_point T>
BasicMatrix<T> scaled(const BasicMatrix<T>& a, T factor);
template <std::floating_point T>
void add_inplace(BasicMatrix<T>& a, const BasicMatrix<T>& b);
/// Adds `bias` to every row.
template <std::floating_point T>
void add_row_vector_inplace(BasicMatrix<T>& a, std::span<const T> bias);

/// Entrywise exp. Throws NumericError if any entry overflows.
template <std::floating_point T>
BasicMatrix<T> elementwise_exp(const BasicMatrix<T>& a);

/// Row softmax with per-column positive weights:
///   out(i, j) = w_j exp(z_ij) / sum_j' w_j' exp(z_ij').
/// The row maximum is subtracted before exponentiation.
template <std::floating_point T>
BasicMatrix<T> weighted_softmax_rows(const BasicMatrix<T>& scores,
                                     std::span<const std::type_identity_t<T>> weights);
template <std::floating_point T>
BasicMatrix<T> softmax_rows(const BasicMatrix<T>& scores);

// Structural helpers.
template <std::floating_point T>
BasicMatrix<T> vstack(const BasicMatrix<T>& top, const BasicMatrix<T>& bottom);
/// Rows [begin, end).
template <std::floating_point T>
BasicMatrix<T> slice_rows(const BasicMatrix<T>& a, std::size_t begin, std::size_t end);
template <std::floating_point T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& a, std::span<const std::size_t> indices);
/// Columns [begin, end).
template <std::floating_point T>
BasicMatrix<T> slice_cols(const BasicMatrix<T>& a, std::size_t begin, std::size_t end);
/// Writes `block` into `dst` starting at column `col`.
template <std::floating_point T>
void set_cols(BasicMatrix<T>& dst, std::size_t col, const BasicMatrix<T>& block);

// Diagnostics.
template <std::floating_point T>
T max_abs_diff(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <std::floating_point T>
T frobenius_norm(const BasicMatrix<T>& a);
template <std::floating_point T>
bool all_finite(const BasicMatrix<T>& a) noexcept;
/// Throws NumericError mentioning `context` if `a` holds a NaN or Inf.
template <std::floating_point T>
void require_finite(const BasicMatrix<T>& a, const char* context);

template <std::floating_point To, std::floating_point From>
BasicMatrix<To> convert(const BasicMatrix<From>& a) {
  std::vector<To> out(a.values().begin(), a.values().end());
  return BasicMatrix<To>(a.rows(), a.cols(), std::move(out));
}

}  // namespace vcc
