#include "vcc/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace vcc {

namespace {

template <std::floating_point T>
void require_same_shape(const BasicMatrix<T>& a, const BasicMatrix<T>& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape() + " vs " +
                     b.shape());
  }
}

}  // namespace

template <std::floating_point T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  BasicMatrix<T> out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t width = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* dst = out.row(i).data();
    const T* lhs = a.row(i).data();
    for (std::size_t t = 0; t < inner; ++t) {
      const T scale = lhs[t];
      const T* rhs = b.row(t).data();
      for (std::size_t j = 0; j < width; ++j) dst[j] += scale * rhs[j];
    }
  }
  require_finite(out, "matmul");
  return out;
}

template <std::floating_point T>
BasicMatrix<T> matmul_transposed(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: cannot multiply " + a.shape() +
                     " by transpose of " + b.shape());
  }
  BasicMatrix<T> out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* lhs = a.row(i).data();
    T* dst = out.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const T* rhs = b.row(j).data();
      T acc = 0;
      for (std::size_t t = 0; t < inner; ++t) acc += lhs[t] * rhs[t];
      dst[j] = acc;
    }
  }
  require_finite(out, "matmul_transposed");
  return out;
}

template <std::floating_point T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <std::floating_point T>
BasicMatrix<T> add(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  BasicMatrix<T> out = a;
  add_inplace(out, b);
  return out;
}

template <std::floating_point T>
BasicMatrix<T> subtract(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_same_shape(a, b, "subtract");
  BasicMatrix<T> out = a;
  auto dst = out.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= rhs[i];
  require_finite(out, "subtract");
  return out;
}

template <std::floating_point T>
BasicMatrix<T> scaled(const BasicMatrix<T>& a, T factor) {
  BasicMatrix<T> out = a;
  for (T& v : out.values()) v *= factor;
  require_finite(out, "scaled");
  return out;
}

template <std::floating_point T>
void add_inplace(BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_same_shape(a, b, "add");
  auto dst = a.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += rhs[i];
  require_finite(a, "add");
}

template <std::floating_point T>
void add_row_vector_inplace(BasicMatrix<T>& a, std::span<const T> bias) {
  if (bias.size() != a.cols()) {
    throw ShapeError("add_row_vector: bias length " + std::to_string(bias.size()) +
                     " vs matrix " + a.shape());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  require_finite(a, "add_row_vector");
}

template <std::floating_point T>
BasicMatrix<T> elementwise_exp(const BasicMatrix<T>& a) {
  require_finite(a, "elementwise_exp input");
  BasicMatrix<T> out = a;
  for (T& v : out.values()) v = std::exp(v);
  if (!all_finite(out)) throw NumericError("elementwise_exp: overflow");
  return out;
}

template <std::floating_point T>
BasicMatrix<T> weighted_softmax_rows(const BasicMatrix<T>& scores,
                                     std::span<const std::type_identity_t<T>> weights) {
  if (weights.size() != scores.cols()) {
    throw ShapeError("weighted_softmax_rows: " + std::to_string(weights.size()) +
                     " weights for scores " + scores.shape());
  }
  for (T w : weights) {
    if (!(w > T(0)) || !std::isfinite(w)) {
      throw InvalidArgument("weighted_softmax_rows: weights must be positive");
    }
  }
  require_finite(scores, "weighted_softmax_rows input");
  BasicMatrix<T> out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto src = scores.row(i);
    auto dst = out.row(i);
    const T peak = *std::max_element(src.begin(), src.end());
    T total = 0;
    for (std::size_t j = 0; j < src.size(); ++j) {
      dst[j] = weights[j] * std::exp(src[j] - peak);
      total += dst[j];
    }
    for (T& v : dst) v /= total;
  }
  return out;
}

template <std::floating_point T>
BasicMatrix<T> softmax_rows(const BasicMatrix<T>& scores) {
  std::vector<T> ones(scores.cols(), T(1));
  return weighted_softmax_rows<T>(scores, ones);
}

template <std::floating_point T>
BasicMatrix<T> vstack(const BasicMatrix<T>& top, const BasicMatrix<T>& bottom) {
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vstack: " + top.shape() + " over " + bottom.shape());
  }
  std::vector<T> data;
  data.reserve(top.size() + bottom.size());
  data.insert(data.end(), top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return BasicMatrix<T>(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

template <std::floating_point T>
BasicMatrix<T> slice_rows(const BasicMatrix<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of " + a.shape());
  }
  auto vals = a.values();
  std::vector<T> data(vals.begin() + begin * a.cols(), vals.begin() + end * a.cols());
  return BasicMatrix<T>(end - begin, a.cols(), std::move(data));
}

template <std::floating_point T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& a, std::span<const std::size_t> indices) {
  BasicMatrix<T> out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(indices[i]) +
                       " out of " + a.shape());
    }
    std::copy_n(a.row(indices[i]).data(), a.cols(), out.row(i).data());
  }
  return out;
}

template <std::floating_point T>
BasicMatrix<T> slice_cols(const BasicMatrix<T>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of " + a.shape());
  }
  BasicMatrix<T> out(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy_n(a.row(i).data() + begin, end - begin, out.row(i).data());
  return out;
}

template <std::floating_point T>
void set_cols(BasicMatrix<T>& dst, std::size_t col, const BasicMatrix<T>& block) {
  if (block.rows() != dst.rows() || col + block.cols() > dst.cols()) {
    throw ShapeError("set_cols: block " + block.shape() + " at column " +
                     std::to_string(col) + " of " + dst.shape());
  }
  for (std::size_t i = 0; i < dst.rows(); ++i)
    std::copy_n(block.row(i).data(), block.cols(), dst.row(i).data() + col);
}

template <std::floating_point T>
T max_abs_diff(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  T worst = 0;
  auto lhs = a.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < lhs.size(); ++i)
    worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
  return worst;
}

template <std::floating_point T>
T frobenius_norm(const BasicMatrix<T>& a) {
  T acc = 0;
  for (T v : a.values()) acc += v * v;
  return std::sqrt(acc);
}

template <std::floating_point T>
bool all_finite(const BasicMatrix<T>& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](T v) { return std::isfinite(v); });
}

template <std::floating_point T>
void require_finite(const BasicMatrix<T>& a, const char* context) {
  if (!all_finite(a)) {
    throw NumericError(std::string(context) + ": non-finite entry in " + a.shape() +
                       " matrix");
  }
}

#define VCC_INSTANTIATE(T)                                                        \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);   \
  template BasicMatrix<T> matmul_transposed(const BasicMatrix<T>&,                \
                                            const BasicMatrix<T>&);               \
  template BasicMatrix<T> transpose(const BasicMatrix<T>&);                       \
  template BasicMatrix<T> add(const BasicMatrix<T>&, const BasicMatrix<T>&);      \
  template BasicMatrix<T> subtract(const BasicMatrix<T>&, const BasicMatrix<T>&); \
  template BasicMatrix<T> scaled(const BasicMatrix<T>&, T);                       \
  template void add_inplace(BasicMatrix<T>&, const BasicMatrix<T>&);              \
  template void add_row_vector_inplace(BasicMatrix<T>&, std::span<const T>);      \
  template BasicMatrix<T> elementwise_exp(const BasicMatrix<T>&);                 \
  template BasicMatrix<T> weighted_softmax_rows(const BasicMatrix<T>&,            \
                                                std::span<const T>);              \
  template BasicMatrix<T> softmax_rows(const BasicMatrix<T>&);                    \
  template BasicMatrix<T> vstack(const BasicMatrix<T>&, const BasicMatrix<T>&);   \
  template BasicMatrix<T> slice_rows(const BasicMatrix<T>&, std::size_t,          \
                                     std::size_t);                                \
  template BasicMatrix<T> gather_rows(const BasicMatrix<T>&,                      \
                                      std::span<const std::size_t>);              \
  template BasicMatrix<T> slice_cols(const BasicMatrix<T>&, std::size_t,          \
                                     std::size_t);                                \
  template void set_cols(BasicMatrix<T>&, std::size_t, const BasicMatrix<T>&);    \
  template T max_abs_diff(const BasicMatrix<T>&, const BasicMatrix<T>&);          \
  template T frobenius_norm(const BasicMatrix<T>&);                               \
  template bool all_finite(const BasicMatrix<T>&) noexcept;                       \
  template void require_finite(const BasicMatrix<T>&, const char*);

VCC_INSTANTIATE(float)
VCC_INSTANTIATE(double)

#undef VCC_INSTANTIATE

}  // namespace vcc
