#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vcc/matrix.hpp"
#include "vcc/rng.hpp"

namespace vcc {

enum class Activation : std::uint32_t { relu = 0, gelu = 1 };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// How attention scores become mixing weights.
enum class AttentionNormalization {
  softmax,  ///< weighted row softmax (the deployed path)
  none,     ///< exp(scores) rescaled by key weights, no row normalization
};

struct LayerConfig {
  std::size_t dim = 0;
  std::size_t heads = 1;
  std::size_t ffn_dim = 0;
  Activation activation = Activation::relu;
  /// Pre-attention and pre-FFN layer norm.
  bool use_layer_norm = false;
  /// Multiply scores by 1/sqrt(head_dim).
  bool score_scaling = true;

  std::size_t head_dim() const { return heads ? dim / heads : 0; }
  /// Throws InvalidArgument unless dim > 0, ffn_dim > 0 and heads divides dim.
  void validate() const;
};

/// Projection, feed-forward and optional layer-norm parameters of one layer.
/// Per-head projections are dim × head_dim; `output` is (heads·head_dim) × dim.
template <std::floating_point T>
struct LayerWeights {
  LayerConfig config;
  std::vector<BasicMatrix<T>> query;
  std::vector<BasicMatrix<T>> key;
  std::vector<BasicMatrix<T>> value;
  BasicMatrix<T> output;
  BasicMatrix<T> ffn_in;  // dim × ffn_dim
  std::vector<T> ffn_in_bias;
  BasicMatrix<T> ffn_out;  // ffn_dim × dim
  std::vector<T> ffn_out_bias;
  std::vector<T> norm1_gain, norm1_bias;
  std::vector<T> norm2_gain, norm2_bias;

  static LayerWeights zeros(const LayerConfig& config);
  /// Gaussian matrices with standard deviation `stddev`; biases zero,
  /// layer-norm gains one.
  static LayerWeights random(const LayerConfig& config, Rng& rng, T stddev);

  void validate() const;
};

/// Element-type conversion of every parameter.
template <std::floating_point To, std::floating_point From>
LayerWeights<To> convert(const LayerWeights<From>& w) {
  const auto vec = [](const std::vector<From>& v) { return std::vector<To>(v.begin(), v.end()); };
  const auto mats = [](const std::vector<BasicMatrix<From>>& v) {
    std::vector<BasicMatrix<To>> out;
    for (const auto& m : v) out.push_back(convert<To>(m));
    return out;
  };
  return {w.config,           mats(w.query),         mats(w.key),
          mats(w.value),      convert<To>(w.output), convert<To>(w.ffn_in),
          vec(w.ffn_in_bias), convert<To>(w.ffn_out), vec(w.ffn_out_bias),
          vec(w.norm1_gain),  vec(w.norm1_bias),     vec(w.norm2_gain),
          vec(w.norm2_bias)};
}

template <std::floating_point T>
struct AttentionOptions {
  /// Positive multiplicity per key row; empty means all ones.
  std::span<const T> key_weights{};
  AttentionNormalization normalization = AttentionNormalization::softmax;
};

/// Multi-head attention of `queries` over `keys`/`values` (rows are tokens).
/// Layer norm is not applied here; see gamma().
template <std::floating_point T>
BasicMatrix<T> mha(const BasicMatrix<T>& queries, const BasicMatrix<T>& keys,
                   const BasicMatrix<T>& values, const LayerWeights<T>& w,
                   const AttentionOptions<T>& options = {});

/// exp(Q Kᵀ) V with no heads, projections or normalization.
template <std::floating_point T>
BasicMatrix<T> simplified_attention(const BasicMatrix<T>& q, const BasicMatrix<T>& k,
                                    const BasicMatrix<T>& v);

/// activation(X W1 + b1) W2 + b2
template <std::floating_point T>
BasicMatrix<T> ffn(const BasicMatrix<T>& x, const LayerWeights<T>& w);

/// Row-wise layer norm with the given gain and bias (eps = 1e-5).
template <std::floating_point T>
BasicMatrix<T> layer_norm(const BasicMatrix<T>& x, std::span<const T> gain,
                          std::span<const T> bias);

/// Scaled per-head attention logits (queries · W_Q,h)(keys · W_K,h)ᵀ. Applies
/// the pre-attention layer norm when the layer uses one, so the logits match
/// what gamma() feeds its softmax.
template <std::floating_point T>
BasicMatrix<T> head_logits(const BasicMatrix<T>& queries, const BasicMatrix<T>& keys,
                           const LayerWeights<T>& w, std::size_t head);

/// Heavy part of a layer for queries attending over `context`:
///   β(α(Q, K, K) + Q) + α(Q, K, K).
template <std::floating_point T>
BasicMatrix<T> gamma(const BasicMatrix<T>& queries, const BasicMatrix<T>& context,
                     const LayerWeights<T>& w, const AttentionOptions<T>& options = {});

/// Self-attention form γ(X).
template <std::floating_point T>
BasicMatrix<T> gamma(const BasicMatrix<T>& x, const LayerWeights<T>& w);

/// γ(X) + X
template <std::floating_point T>
BasicMatrix<T> layer_forward(const BasicMatrix<T>& x, const LayerWeights<T>& w);

// Weight files. Little-endian, every real stored as IEEE-754 binary64:
//
//   offset  size  field
//   0       4     magic "VCCW"
//   4       4     u32 format version (1)
//   8       8     u64 dim
//   16      8     u64 heads
//   24      8     u64 head_dim
//   32      8     u64 ffn_dim
//   40      4     u32 activation (0 relu, 1 gelu)
//   44      4     u32 flags (bit 0 layer norm, bit 1 score scaling)
//   48      ...   per head h: query[h], key[h], value[h] (dim × head_dim each)
//                 output (heads·head_dim × dim), ffn_in (dim × ffn_dim),
//                 ffn_in_bias (ffn_dim), ffn_out (ffn_dim × dim),
//                 ffn_out_bias (dim), then only when bit 0 is set:
//                 norm1_gain, norm1_bias, norm2_gain, norm2_bias (dim each)
//
// Matrices are row-major.
template <std::floating_point T>
void write_weights(std::ostream& out, const LayerWeights<T>& w);
template <std::floating_point T>
LayerWeights<T> read_weights(std::istream& in);
template <std::floating_point T>
void save_weights(const std::string& path, const LayerWeights<T>& w);
template <std::floating_point T>
LayerWeights<T> load_weights(const std::string& path);

}  // namespace vcc
