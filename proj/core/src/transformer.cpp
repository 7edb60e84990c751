#include "vcc/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"

namespace vcc {

namespace {

constexpr std::size_t kQueryBlock = 64;
constexpr std::uint32_t kWeightsVersion = 1;

template <std::floating_point T>
void require_shape(const BasicMatrix<T>& m, std::size_t rows, std::size_t cols,
                   const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError("layer weights: " + name + " is " + m.shape() + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

template <std::floating_point T>
void require_length(const std::vector<T>& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw ShapeError("layer weights: " + name + " has length " +
                     std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

template <std::floating_point T>
T activate(Activation a, T x) {
  switch (a) {
    case Activation::relu:
      return x > T(0) ? x : T(0);
    case Activation::gelu:
      return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  }
  return x;
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::gelu ? "gelu" : "relu";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "gelu") return Activation::gelu;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void LayerConfig::validate() const {
  if (dim == 0 || heads == 0 || ffn_dim == 0) {
    throw InvalidArgument("layer config: dim, heads and ffn_dim must be positive");
  }
  if (dim % heads != 0) {
    throw InvalidArgument("layer config: dim " + std::to_string(dim) +
                          " is not divisible by heads " + std::to_string(heads));
  }
}

template <std::floating_point T>
LayerWeights<T> LayerWeights<T>::zeros(const LayerConfig& config) {
  config.validate();
  const std::size_t d = config.dim;
  const std::size_t dh = config.head_dim();
  LayerWeights w;
  w.config = config;
  for (std::size_t h = 0; h < config.heads; ++h) {
    w.query.emplace_back(d, dh);
    w.key.emplace_back(d, dh);
    w.value.emplace_back(d, dh);
  }
  w.output = BasicMatrix<T>(config.heads * dh, d);
  w.ffn_in = BasicMatrix<T>(d, config.ffn_dim);
  w.ffn_in_bias.assign(config.ffn_dim, T(0));
  w.ffn_out = BasicMatrix<T>(config.ffn_dim, d);
  w.ffn_out_bias.assign(d, T(0));
  if (config.use_layer_norm) {
    w.norm1_gain.assign(d, T(1));
    w.norm1_bias.assign(d, T(0));
    w.norm2_gain.assign(d, T(1));
    w.norm2_bias.assign(d, T(0));
  }
  return w;
}

template <std::floating_point T>
LayerWeights<T> LayerWeights<T>::random(const LayerConfig& config, Rng& rng, T stddev) {
  LayerWeights w = zeros(config);
  const std::size_t d = config.dim;
  const std::size_t dh = config.head_dim();
  for (std::size_t h = 0; h < config.heads; ++h) {
    w.query[h] = rng.gaussian_matrix<T>(d, dh, stddev);
    w.key[h] = rng.gaussian_matrix<T>(d, dh, stddev);
    w.value[h] = rng.gaussian_matrix<T>(d, dh, stddev);
  }
  w.output = rng.gaussian_matrix<T>(config.heads * dh, d, stddev);
  w.ffn_in = rng.gaussian_matrix<T>(d, config.ffn_dim, stddev);
  w.ffn_out = rng.gaussian_matrix<T>(config.ffn_dim, d, stddev);
  return w;
}

template <std::floating_point T>
void LayerWeights<T>::validate() const {
  config.validate();
  const std::size_t d = config.dim;
  const std::size_t dh = config.head_dim();
  if (query.size() != config.heads || key.size() != config.heads ||
      value.size() != config.heads) {
    throw ShapeError("layer weights: expected " + std::to_string(config.heads) +
                     " per-head projections");
  }
  for (std::size_t h = 0; h < config.heads; ++h) {
    require_shape(query[h], d, dh, "query[" + std::to_string(h) + "]");
    require_shape(key[h], d, dh, "key[" + std::to_string(h) + "]");
    require_shape(value[h], d, dh, "value[" + std::to_string(h) + "]");
  }
  require_shape(output, config.heads * dh, d, "output");
  require_shape(ffn_in, d, config.ffn_dim, "ffn_in");
  require_shape(ffn_out, config.ffn_dim, d, "ffn_out");
  require_length(ffn_in_bias, config.ffn_dim, "ffn_in_bias");
  require_length(ffn_out_bias, d, "ffn_out_bias");
  if (config.use_layer_norm) {
    require_length(norm1_gain, d, "norm1_gain");
    require_length(norm1_bias, d, "norm1_bias");
    require_length(norm2_gain, d, "norm2_gain");
    require_length(norm2_bias, d, "norm2_bias");
  }
}

template <std::floating_point T>
BasicMatrix<T> mha(const BasicMatrix<T>& queries, const BasicMatrix<T>& keys,
                   const BasicMatrix<T>& values, const LayerWeights<T>& w,
                   const AttentionOptions<T>& options) {
  const LayerConfig& cfg = w.config;
  const std::size_t d = cfg.dim;
  if (queries.cols() != d || keys.cols() != d || values.cols() != d) {
    throw ShapeError("mha: inputs " + queries.shape() + ", " + keys.shape() + ", " +
                     values.shape() + " do not have width " + std::to_string(d));
  }
  if (keys.rows() != values.rows()) {
    throw ShapeError("mha: keys " + keys.shape() + " and values " + values.shape() +
                     " differ in length");
  }
  if (keys.rows() == 0) throw ShapeError("mha: no keys");

  std::vector<T> ones;
  std::span<const T> weights = options.key_weights;
  if (weights.empty()) {
    ones.assign(keys.rows(), T(1));
    weights = ones;
  } else if (weights.size() != keys.rows()) {
    throw ShapeError("mha: " + std::to_string(weights.size()) + " key weights for " +
                     std::to_string(keys.rows()) + " keys");
  }
  for (T kw : weights) {
    if (!(kw > T(0))) throw InvalidArgument("mha: key weights must be positive");
  }

  const std::size_t dh = cfg.head_dim();
  const T scale = cfg.score_scaling ? T(1) / std::sqrt(static_cast<T>(dh)) : T(1);
  BasicMatrix<T> concat(queries.rows(), cfg.heads * dh);

  for (std::size_t h = 0; h < cfg.heads; ++h) {
    BasicMatrix<T> qh = matmul(queries, w.query[h]);
    if (scale != T(1)) qh = scaled(qh, scale);
    const BasicMatrix<T> kh = matmul(keys, w.key[h]);
    const BasicMatrix<T> vh = matmul(values, w.value[h]);

    // Query blocks bound the score buffer to kQueryBlock × n_k.
    for (std::size_t begin = 0; begin < queries.rows(); begin += kQueryBlock) {
      const std::size_t end = std::min(queries.rows(), begin + kQueryBlock);
      const BasicMatrix<T> logits = matmul_transposed(slice_rows(qh, begin, end), kh);
      BasicMatrix<T> mix;
      if (options.normalization == AttentionNormalization::softmax) {
        mix = weighted_softmax_rows(logits, weights);
      } else {
        mix = elementwise_exp(logits);
        for (std::size_t i = 0; i < mix.rows(); ++i) {
          auto r = mix.row(i);
          for (std::size_t j = 0; j < r.size(); ++j) r[j] *= weights[j];
        }
      }
      const BasicMatrix<T> block = matmul(mix, vh);
      for (std::size_t i = 0; i < block.rows(); ++i)
        std::copy_n(block.row(i).data(), dh, concat.row(begin + i).data() + h * dh);
    }
  }
  return matmul(concat, w.output);
}

template <std::floating_point T>
BasicMatrix<T> simplified_attention(const BasicMatrix<T>& q, const BasicMatrix<T>& k,
                                    const BasicMatrix<T>& v) {
  return matmul(elementwise_exp(matmul_transposed(q, k)), v);
}

template <std::floating_point T>
BasicMatrix<T> ffn(const BasicMatrix<T>& x, const LayerWeights<T>& w) {
  if (x.cols() != w.config.dim) {
    throw ShapeError("ffn: input " + x.shape() + " does not have width " +
                     std::to_string(w.config.dim));
  }
  BasicMatrix<T> hidden = matmul(x, w.ffn_in);
  add_row_vector_inplace<T>(hidden, w.ffn_in_bias);
  for (T& v : hidden.values()) v = activate(w.config.activation, v);
  BasicMatrix<T> out = matmul(hidden, w.ffn_out);
  add_row_vector_inplace<T>(out, w.ffn_out_bias);
  return out;
}

template <std::floating_point T>
BasicMatrix<T> layer_norm(const BasicMatrix<T>& x, std::span<const T> gain,
                          std::span<const T> bias) {
  if (gain.size() != x.cols() || bias.size() != x.cols()) {
    throw ShapeError("layer_norm: parameters do not match input " + x.shape());
  }
  constexpr T eps = T(1e-5);
  BasicMatrix<T> out(x.rows(), x.cols());
  const T width = static_cast<T>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    T mean = 0;
    for (T v : src) mean += v;
    mean /= width;
    T var = 0;
    for (T v : src) var += (v - mean) * (v - mean);
    var /= width;
    const T inv = T(1) / std::sqrt(var + eps);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j)
      dst[j] = (src[j] - mean) * inv * gain[j] + bias[j];
  }
  return out;
}

template <std::floating_point T>
BasicMatrix<T> head_logits(const BasicMatrix<T>& queries, const BasicMatrix<T>& keys,
                           const LayerWeights<T>& w, std::size_t head) {
  if (head >= w.config.heads) throw InvalidArgument("head_logits: head out of range");
  const bool norm = w.config.use_layer_norm;
  const BasicMatrix<T> q =
      norm ? layer_norm<T>(queries, w.norm1_gain, w.norm1_bias) : queries;
  const BasicMatrix<T> k = norm ? layer_norm<T>(keys, w.norm1_gain, w.norm1_bias) : keys;
  BasicMatrix<T> logits = matmul_transposed(matmul(q, w.query[head]), matmul(k, w.key[head]));
  if (w.config.score_scaling) {
    logits = scaled(logits, T(1) / std::sqrt(static_cast<T>(w.config.head_dim())));
  }
  return logits;
}

template <std::floating_point T>
BasicMatrix<T> gamma(const BasicMatrix<T>& queries, const BasicMatrix<T>& context,
                     const LayerWeights<T>& w, const AttentionOptions<T>& options) {
  BasicMatrix<T> attended;
  if (w.config.use_layer_norm) {
    const BasicMatrix<T> q = layer_norm<T>(queries, w.norm1_gain, w.norm1_bias);
    const BasicMatrix<T> c = layer_norm<T>(context, w.norm1_gain, w.norm1_bias);
    attended = mha(q, c, c, w, options);
  } else {
    attended = mha(queries, context, context, w, options);
  }
  BasicMatrix<T> hidden = add(attended, queries);
  if (w.config.use_layer_norm) hidden = layer_norm<T>(hidden, w.norm2_gain, w.norm2_bias);
  BasicMatrix<T> out = ffn(hidden, w);
  add_inplace(out, attended);
  return out;
}

template <std::floating_point T>
BasicMatrix<T> gamma(const BasicMatrix<T>& x, const LayerWeights<T>& w) {
  return gamma(x, x, w, AttentionOptions<T>{});
}

template <std::floating_point T>
BasicMatrix<T> layer_forward(const BasicMatrix<T>& x, const LayerWeights<T>& w) {
  BasicMatrix<T> out = gamma(x, w);
  add_inplace(out, x);
  return out;
}

template <std::floating_point T>
void write_weights(std::ostream& out, const LayerWeights<T>& w) {
  w.validate();
  const LayerConfig& c = w.config;
  detail::write_magic(out, "VCCW");
  detail::write_le<std::uint32_t>(out, kWeightsVersion);
  detail::write_le<std::uint64_t>(out, c.dim);
  detail::write_le<std::uint64_t>(out, c.heads);
  detail::write_le<std::uint64_t>(out, c.head_dim());
  detail::write_le<std::uint64_t>(out, c.ffn_dim);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.activation));
  const std::uint32_t flags =
      (c.use_layer_norm ? 1u : 0u) | (c.score_scaling ? 2u : 0u);
  detail::write_le<std::uint32_t>(out, flags);
  for (std::size_t h = 0; h < c.heads; ++h) {
    detail::write_reals(out, w.query[h].values());
    detail::write_reals(out, w.key[h].values());
    detail::write_reals(out, w.value[h].values());
  }
  detail::write_reals(out, w.output.values());
  detail::write_reals(out, w.ffn_in.values());
  detail::write_reals<T>(out, w.ffn_in_bias);
  detail::write_reals(out, w.ffn_out.values());
  detail::write_reals<T>(out, w.ffn_out_bias);
  if (c.use_layer_norm) {
    detail::write_reals<T>(out, w.norm1_gain);
    detail::write_reals<T>(out, w.norm1_bias);
    detail::write_reals<T>(out, w.norm2_gain);
    detail::write_reals<T>(out, w.norm2_bias);
  }
  if (!out) throw IoError("failed writing layer weights");
}

template <std::floating_point T>
LayerWeights<T> read_weights(std::istream& in) {
  detail::expect_magic(in, "VCCW");
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kWeightsVersion) {
    throw IoError("unsupported weight file version " + std::to_string(version));
  }
  LayerConfig c;
  c.dim = detail::read_le<std::uint64_t>(in, "dim");
  c.heads = detail::read_le<std::uint64_t>(in, "heads");
  const auto head_dim = detail::read_le<std::uint64_t>(in, "head_dim");
  c.ffn_dim = detail::read_le<std::uint64_t>(in, "ffn_dim");
  const auto activation = detail::read_le<std::uint32_t>(in, "activation");
  if (activation > 1) throw IoError("unknown activation id " + std::to_string(activation));
  c.activation = static_cast<Activation>(activation);
  const auto flags = detail::read_le<std::uint32_t>(in, "flags");
  c.use_layer_norm = flags & 1u;
  c.score_scaling = flags & 2u;
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("weight file header: ") + e.what());
  }
  if (head_dim != c.head_dim()) throw IoError("weight file header: inconsistent head_dim");

  LayerWeights<T> w = LayerWeights<T>::zeros(c);
  for (std::size_t h = 0; h < c.heads; ++h) {
    detail::read_reals(in, w.query[h].values(), "query projection");
    detail::read_reals(in, w.key[h].values(), "key projection");
    detail::read_reals(in, w.value[h].values(), "value projection");
  }
  detail::read_reals(in, w.output.values(), "output projection");
  detail::read_reals(in, w.ffn_in.values(), "ffn_in");
  detail::read_reals<T>(in, w.ffn_in_bias, "ffn_in_bias");
  detail::read_reals(in, w.ffn_out.values(), "ffn_out");
  detail::read_reals<T>(in, w.ffn_out_bias, "ffn_out_bias");
  if (c.use_layer_norm) {
    detail::read_reals<T>(in, w.norm1_gain, "norm1_gain");
    detail::read_reals<T>(in, w.norm1_bias, "norm1_bias");
    detail::read_reals<T>(in, w.norm2_gain, "norm2_gain");
    detail::read_reals<T>(in, w.norm2_bias, "norm2_bias");
  }
  return w;
}

template <std::floating_point T>
void save_weights(const std::string& path, const LayerWeights<T>& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_weights(out, w);
}

template <std::floating_point T>
LayerWeights<T> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    return read_weights<T>(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

#define VCC_INSTANTIATE(T)                                                              \
  template struct LayerWeights<T>;                                                      \
  template BasicMatrix<T> mha(const BasicMatrix<T>&, const BasicMatrix<T>&,             \
                              const BasicMatrix<T>&, const LayerWeights<T>&,            \
                              const AttentionOptions<T>&);                              \
  template BasicMatrix<T> simplified_attention(const BasicMatrix<T>&,                   \
                                               const BasicMatrix<T>&,                   \
                                               const BasicMatrix<T>&);                  \
  template BasicMatrix<T> ffn(const BasicMatrix<T>&, const LayerWeights<T>&);           \
  template BasicMatrix<T> layer_norm(const BasicMatrix<T>&, std::span<const T>,         \
                                     std::span<const T>);                               \
  template BasicMatrix<T> head_logits(const BasicMatrix<T>&, const BasicMatrix<T>&,     \
                                      const LayerWeights<T>&, std::size_t);             \
  template BasicMatrix<T> gamma(const BasicMatrix<T>&, const BasicMatrix<T>&,           \
                                const LayerWeights<T>&, const AttentionOptions<T>&);    \
  template BasicMatrix<T> gamma(const BasicMatrix<T>&, const LayerWeights<T>&);         \
  template BasicMatrix<T> layer_forward(const BasicMatrix<T>&, const LayerWeights<T>&); \
  template void write_weights(std::ostream&, const LayerWeights<T>&);                   \
  template LayerWeights<T> read_weights(std::istream&);                                 \
  template void save_weights(const std::string&, const LayerWeights<T>&);               \
  template LayerWeights<T> load_weights(const std::string&);

VCC_INSTANTIATE(float)
VCC_INSTANTIATE(double)

#undef VCC_INSTANTIATE

}  // namespace vcc
