#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "vcc/config.hpp"
#include "vcc/rng.hpp"
#include "vcc/selection.hpp"
#include "vcc/seq_tree.hpp"
#include "vcc/transformer.hpp"
#include "vcc/vip_layout.hpp"

namespace vcc {

struct ModelConfig {
  /// Total layers.
  std::size_t layers = 1;
  /// Leading layers run independently on segment_width-row segments.
  std::size_t initial_layers = 0;
  std::size_t segment_width = 512;
  std::size_t k = 2;
  SelectionBudget budget = SelectionBudget::two_resolution(1);
  ScoringMode scoring = ScoringMode::projected;
  /// Weighted softmax over [P; S_c C] keys; false uses unnormalized exp scores.
  bool normalized_attention = true;
  LayerConfig layer;

  std::size_t compressed_layers() const noexcept { return layers - initial_layers; }
  /// Throws InvalidArgument.
  void validate() const;
};

// Config file keys (one `key = value` per line):
//   layers, initial_layers, segment_width, k        counts
//   budget        lossless | two_resolution:H | rows:N | per_level:S=H,...
//   scoring       projected | simplified
//   normalized_attention, layer_norm, score_scaling  true | false
//   dim, heads, ffn_dim                              counts
//   activation    relu | gelu
// Unknown keys are errors.
ModelConfig parse_model_config(std::istream& in);
/// Applies `entries` on top of `base`; entries whose key is not a model key
/// are returned untouched in `rest` when it is non-null, otherwise rejected.
ModelConfig apply_model_config(const std::vector<ConfigEntry>& entries, ModelConfig base,
                               std::vector<ConfigEntry>* rest = nullptr);
void write_model_config(std::ostream& out, const ModelConfig& config);

template <std::floating_point T>
struct Model {
  ModelConfig config;
  std::vector<LayerWeights<T>> weights;  ///< one per layer

  /// Independent Gaussian weights per layer drawn from forks of `rng`.
  static Model random(const ModelConfig& config, Rng& rng, T stddev);
  void validate() const;
};

struct LayerDiagnostics {
  std::size_t components = 0;  ///< |J|
  std::size_t rows = 0;        ///< r = n_p + |J|
  std::size_t writes = 0;
  std::size_t retrievals = 0;
  double milliseconds = 0;
};

struct CompressedLayerOptions {
  SelectionBudget budget = SelectionBudget::two_resolution(1);
  ScoringMode scoring = ScoringMode::projected;
  AttentionNormalization normalization = AttentionNormalization::softmax;
  /// Real (non-pad) rows of C; the pads sit at the end.
  std::size_t real_rows = static_cast<std::size_t>(-1);
};

template <std::floating_point T>
struct CompressedLayerResult {
  BasicMatrix<T> vip;  ///< P_new
  ComponentSet set;
  LayerDiagnostics diagnostics;
};

/// One layer on [P; S_c C]: selects J, runs the layer over the r compressed
/// rows with keys weighted by their multiplicities, returns P + γ_P and
/// pushes the compressed-row increments into `tree`. Fully padded components
/// are neither queries nor keys and are left unchanged.
template <std::floating_point T>
CompressedLayerResult<T> compressed_layer_forward(const BasicMatrix<T>& vip, SeqTree<T>& tree,
                                                  const LayerWeights<T>& w,
                                                  const CompressedLayerOptions& options);

template <std::floating_point T>
struct EncoderOutput {
  BasicMatrix<T> x;  ///< n × d, rows in input order
  /// One entry per compressed layer.
  std::vector<LayerDiagnostics> layers;
};

/// Initial layers applied per segment of `segment_width` rows.
template <std::floating_point T>
BasicMatrix<T> initial_stage(const BasicMatrix<T>& x, const Model<T>& model);

/// Initial stage, then VIP reorder, one tree build, the compressed layers,
/// materialization and restore.
template <std::floating_point T>
EncoderOutput<T> encoder_forward(const BasicMatrix<T>& x, const std::vector<bool>& vip_mask,
                                 const Model<T>& model);

}  // namespace vcc
