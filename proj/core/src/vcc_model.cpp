#include "vcc/vcc_model.hpp"

#include <chrono>
#include <istream>
#include <ostream>

namespace vcc {

void ModelConfig::validate() const {
  if (layers == 0) throw InvalidArgument("model: layers must be positive");
  if (initial_layers > layers) {
    throw InvalidArgument("model: initial_layers=" + std::to_string(initial_layers) +
                          " exceeds layers=" + std::to_string(layers));
  }
  if (segment_width == 0) throw InvalidArgument("model: segment_width must be positive");
  if (k < 2) throw InvalidArgument("model: k must be at least 2");
  layer.validate();
}

ModelConfig apply_model_config(const std::vector<ConfigEntry>& entries, ModelConfig base,
                               std::vector<ConfigEntry>* rest) {
  for (const ConfigEntry& e : entries) {
    try {
      if (e.key == "layers") {
        base.layers = config_count(e);
      } else if (e.key == "initial_layers") {
        base.initial_layers = config_count(e);
      } else if (e.key == "segment_width") {
        base.segment_width = config_count(e);
      } else if (e.key == "k") {
        base.k = config_count(e);
      } else if (e.key == "budget") {
        base.budget = SelectionBudget::parse(e.value);
      } else if (e.key == "scoring") {
        base.scoring = parse_scoring_mode(e.value);
      } else if (e.key == "normalized_attention") {
        base.normalized_attention = config_bool(e);
      } else if (e.key == "dim") {
        base.layer.dim = config_count(e);
      } else if (e.key == "heads") {
        base.layer.heads = config_count(e);
      } else if (e.key == "ffn_dim") {
        base.layer.ffn_dim = config_count(e);
      } else if (e.key == "activation") {
        base.layer.activation = parse_activation(e.value);
      } else if (e.key == "layer_norm") {
        base.layer.use_layer_norm = config_bool(e);
      } else if (e.key == "score_scaling") {
        base.layer.score_scaling = config_bool(e);
      } else if (rest) {
        rest->push_back(e);
      } else {
        throw ConfigError("unknown key '" + e.key + "'", e.line);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(e.key + ": " + err.what(), e.line);
    }
  }
  return base;
}

ModelConfig parse_model_config(std::istream& in) {
  ModelConfig config = apply_model_config(parse_config(in), ModelConfig{});
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), 0);
  }
  return config;
}

void write_model_config(std::ostream& out, const ModelConfig& c) {
  out << "layers = " << c.layers << '\n'
      << "initial_layers = " << c.initial_layers << '\n'
      << "segment_width = " << c.segment_width << '\n'
      << "k = " << c.k << '\n'
      << "budget = " << c.budget.describe() << '\n'
      << "scoring = " << to_string(c.scoring) << '\n'
      << "normalized_attention = " << (c.normalized_attention ? "true" : "false") << '\n'
      << "dim = " << c.layer.dim << '\n'
      << "heads = " << c.layer.heads << '\n'
      << "ffn_dim = " << c.layer.ffn_dim << '\n'
      << "activation = " << to_string(c.layer.activation) << '\n'
      << "layer_norm = " << (c.layer.use_layer_norm ? "true" : "false") << '\n'
      << "score_scaling = " << (c.layer.score_scaling ? "true" : "false") << '\n';
}

template <std::floating_point T>
Model<T> Model<T>::random(const ModelConfig& config, Rng& rng, T stddev) {
  config.validate();
  Model model{config, {}};
  model.weights.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Rng stream = rng.fork(l);
    model.weights.push_back(LayerWeights<T>::random(config.layer, stream, stddev));
  }
  return model;
}

template <std::floating_point T>
void Model<T>::validate() const {
  config.validate();
  if (weights.size() != config.layers) {
    throw InvalidArgument("model: " + std::to_string(weights.size()) + " weight sets for " +
                          std::to_string(config.layers) + " layers");
  }
  for (const auto& w : weights) {
    w.validate();
    if (w.config.dim != config.layer.dim) {
      throw ShapeError("model: layer weights of width " + std::to_string(w.config.dim) +
                       " in a model of width " + std::to_string(config.layer.dim));
    }
  }
}

template <std::floating_point T>
CompressedLayerResult<T> compressed_layer_forward(const BasicMatrix<T>& vip, SeqTree<T>& tree,
                                                  const LayerWeights<T>& w,
                                                  const CompressedLayerOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (vip.cols() != tree.dim() || vip.cols() != w.config.dim) {
    throw ShapeError("compressed_layer_forward: P " + vip.shape() + ", tree width " +
                     std::to_string(tree.dim()) + ", layer width " +
                     std::to_string(w.config.dim));
  }
  Selection<T> sel = select_components(vip, tree, options.budget, w,
                                       SelectionOptions{options.scoring, options.real_rows});
  const std::size_t n_p = vip.rows();

  std::vector<std::size_t> live;
  live.reserve(sel.set.size());
  for (std::size_t i = 0; i < sel.set.size(); ++i)
    if (sel.set[i].first() < options.real_rows) live.push_back(i);

  const BasicMatrix<T> queries = vstack(vip, gather_rows(sel.rows, live));
  std::vector<T> weights(n_p, T(1));
  for (std::size_t i : live) weights.push_back(static_cast<T>(sel.set[i].size));
  const BasicMatrix<T> delta =
      gamma(queries, queries, w, AttentionOptions<T>{weights, options.normalization});

  CompressedLayerResult<T> out;
  out.vip = vip;
  for (std::size_t i = 0; i < n_p; ++i) {
    auto dst = out.vip.row(i);
    auto src = delta.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  BasicMatrix<T> new_rows = std::move(sel.rows);
  for (std::size_t a = 0; a < live.size(); ++a) {
    auto dst = new_rows.row(live[a]);
    auto src = delta.row(n_p + a);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  const UpdateStats update = tree.apply_update(sel.set, new_rows);

  out.diagnostics.components = sel.set.size();
  out.diagnostics.rows = n_p + sel.set.size();
  out.diagnostics.writes = update.writes;
  out.diagnostics.retrievals = sel.stats.retrievals;
  out.set = std::move(sel.set);
  out.diagnostics.milliseconds =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

template <std::floating_point T>
BasicMatrix<T> initial_stage(const BasicMatrix<T>& x, const Model<T>& model) {
  model.validate();
  BasicMatrix<T> out = x;
  const std::size_t width = model.config.segment_width;
  for (std::size_t begin = 0; begin < x.rows(); begin += width) {
    const std::size_t end = std::min(x.rows(), begin + width);
    BasicMatrix<T> segment = slice_rows(x, begin, end);
    for (std::size_t l = 0; l < model.config.initial_layers; ++l)
      segment = layer_forward(segment, model.weights[l]);
    for (std::size_t r = begin; r < end; ++r) {
      auto src = segment.row(r - begin);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
  }
  return out;
}

template <std::floating_point T>
EncoderOutput<T> encoder_forward(const BasicMatrix<T>& x, const std::vector<bool>& vip_mask,
                                 const Model<T>& model) {
  if (x.cols() != model.config.layer.dim) {
    throw ShapeError("encoder_forward: input " + x.shape() + " for a model of width " +
                     std::to_string(model.config.layer.dim));
  }
  EncoderOutput<T> out;
  BasicMatrix<T> staged = initial_stage(x, model);
  if (model.config.compressed_layers() == 0) {
    if (vip_mask.size() != x.rows()) {
      throw ShapeError("encoder_forward: mask length " + std::to_string(vip_mask.size()) +
                       " for " + std::to_string(x.rows()) + " tokens");
    }
    out.x = std::move(staged);
    return out;
  }

  PartitionedSequence<T> parts = reorder(staged, vip_mask, model.config.k);
  SeqTree<T> tree = SeqTree<T>::build(parts.rest, model.config.k);
  CompressedLayerOptions options{
      model.config.budget, model.config.scoring,
      model.config.normalized_attention ? AttentionNormalization::softmax
                                        : AttentionNormalization::none,
      parts.layout.real_rows()};
  BasicMatrix<T> vip = std::move(parts.vip);
  for (std::size_t l = model.config.initial_layers; l < model.config.layers; ++l) {
    CompressedLayerResult<T> step = compressed_layer_forward(vip, tree, model.weights[l], options);
    vip = std::move(step.vip);
    out.layers.push_back(step.diagnostics);
  }
  out.x = restore(vip, tree.materialize(), parts.layout);
  return out;
}

#define VCC_INSTANTIATE(T)                                                                    \
  template struct Model<T>;                                                                   \
  template CompressedLayerResult<T> compressed_layer_forward(                                 \
      const BasicMatrix<T>&, SeqTree<T>&, const LayerWeights<T>&,                             \
      const CompressedLayerOptions&);                                                         \
  template BasicMatrix<T> initial_stage(const BasicMatrix<T>&, const Model<T>&);              \
  template EncoderOutput<T> encoder_forward(const BasicMatrix<T>&, const std::vector<bool>&, \
                                            const Model<T>&);

VCC_INSTANTIATE(float)
VCC_INSTANTIATE(double)

}  // namespace vcc
