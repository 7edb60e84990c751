#include <sstream>

#include "oracle.hpp"
#include "test_util.hpp"
#include "vcc/error.hpp"
#include "vcc/vcc_model.hpp"

using namespace vcc;
using vcc::testing::near;
using vcc::testing::random_matrix;

namespace {

ModelConfig small_model(std::size_t layers, std::size_t initial, SelectionBudget budget) {
  ModelConfig c;
  c.layers = layers;
  c.initial_layers = initial;
  c.segment_width = 8;
  c.k = 2;
  c.budget = std::move(budget);
  c.layer.dim = 8;
  c.layer.heads = 2;
  c.layer.ffn_dim = 12;
  return c;
}

std::vector<bool> mask_at(std::size_t n, std::initializer_list<std::size_t> vip) {
  std::vector<bool> m(n, false);
  for (std::size_t i : vip) m[i] = true;
  return m;
}

}  // namespace

TEST(CompressedLayer, LosslessEqualsVanillaLayer) {
  Rng rng(51);
  LayerConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  const auto w = LayerWeights<double>::random(cfg, rng, 0.3);
  const Matrix p = random_matrix(rng, 3, 8);
  const Matrix c = random_matrix(rng, 16, 8);
  auto tree = SeqTree<double>::build(c, 2);
  CompressedLayerOptions opts;
  opts.budget = SelectionBudget::lossless();
  const auto got = compressed_layer_forward(p, tree, w, opts);

  const Matrix full = layer_forward(vstack(p, c), w);
  EXPECT_TRUE(near(got.vip, slice_rows(full, 0, 3), 1e-9));
  EXPECT_TRUE(near(tree.materialize(), slice_rows(full, 3, 19), 1e-9));
  EXPECT_EQ(got.diagnostics.components, 16u);
  EXPECT_EQ(got.diagnostics.rows, 19u);
}

TEST(CompressedLayer, ZeroWeightsLeaveEverythingUnchanged) {
  Rng rng(52);
  LayerConfig cfg;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.ffn_dim = 4;
  const auto w = LayerWeights<double>::zeros(cfg);
  const Matrix p = random_matrix(rng, 2, 4);
  const Matrix c = random_matrix(rng, 8, 4);
  auto tree = SeqTree<double>::build(c, 2);
  CompressedLayerOptions opts;
  opts.budget = SelectionBudget::two_resolution(1);
  const auto got = compressed_layer_forward(p, tree, w, opts);
  EXPECT_TRUE(near(got.vip, p, 1e-15));
  EXPECT_TRUE(near(tree.materialize(), c, 1e-15));
}

TEST(CompressedLayer, MatchesDenseConstruction) {
  Rng rng(53);
  LayerConfig cfg;
  cfg.dim = 6;
  cfg.heads = 3;
  cfg.ffn_dim = 10;
  cfg.use_layer_norm = true;
  cfg.activation = Activation::gelu;
  for (int trial = 0; trial < 6; ++trial) {
    const auto w = LayerWeights<double>::random(cfg, rng, 0.5);
    const Matrix p = random_matrix(rng, 2, 6);
    const Matrix c = random_matrix(rng, 16, 6);
    auto tree = SeqTree<double>::build(c, 2);
    CompressedLayerOptions opts;
    opts.budget = SelectionBudget::two_resolution(2);
    opts.normalization =
        trial % 2 ? AttentionNormalization::none : AttentionNormalization::softmax;
    const auto got = compressed_layer_forward(p, tree, w, opts);
    EXPECT_EQ(got.set.size(), 10u);
    const auto want = oracle::dense_compressed_layer(p, c, got.set, w, opts.normalization);
    EXPECT_TRUE(near(got.vip, want.vip, 1e-9));
    EXPECT_TRUE(near(tree.materialize(), want.rest, 1e-9));
  }
}

TEST(CompressedLayer, PaddedComponentsStayUnchanged) {
  Rng rng(54);
  LayerConfig cfg;
  cfg.dim = 4;
  cfg.heads = 1;
  cfg.ffn_dim = 4;
  const auto w = LayerWeights<double>::random(cfg, rng, 0.5);
  const Matrix p = random_matrix(rng, 1, 4);
  Matrix c = random_matrix(rng, 16, 4);
  for (std::size_t i = 10; i < 16; ++i)
    for (std::size_t j = 0; j < 4; ++j) c(i, j) = 0;
  auto tree = SeqTree<double>::build(c, 2);
  CompressedLayerOptions opts;
  opts.budget = SelectionBudget::lossless();
  opts.real_rows = 10;
  const auto got = compressed_layer_forward(p, tree, w, opts);
  const Matrix rest = tree.materialize();
  for (std::size_t i = 10; i < 16; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(rest(i, j), 0.0, 1e-15);

  const Matrix full = layer_forward(vstack(p, slice_rows(c, 0, 10)), w);
  EXPECT_TRUE(near(got.vip, slice_rows(full, 0, 1), 1e-9));
  EXPECT_TRUE(near(slice_rows(rest, 0, 10), slice_rows(full, 1, 11), 1e-9));
}

TEST(CompressedLayer, RejectsWidthMismatch) {
  LayerConfig cfg;
  cfg.dim = 4;
  cfg.heads = 1;
  cfg.ffn_dim = 4;
  const auto w = LayerWeights<double>::zeros(cfg);
  auto tree = SeqTree<double>::build(Matrix(8, 3), 2);
  EXPECT_THROW(compressed_layer_forward(Matrix(1, 3), tree, w, {}), ShapeError);
}

TEST(Encoder, AllInitialLayersIsSegmentedVanilla) {
  Rng rng(55);
  auto model = Model<double>::random(small_model(2, 2, SelectionBudget::lossless()), rng, 0.3);
  const Matrix x = random_matrix(rng, 20, 8);
  const auto out = encoder_forward(x, mask_at(20, {0}), model);
  EXPECT_TRUE(out.layers.empty());
  Matrix want = x;
  for (std::size_t begin = 0; begin < 20; begin += 8) {
    const std::size_t end = std::min<std::size_t>(20, begin + 8);
    Matrix seg = slice_rows(x, begin, end);
    for (const auto& w : model.weights) seg = layer_forward(seg, w);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < 8; ++j) want(i, j) = seg(i - begin, j);
  }
  EXPECT_TRUE(near(out.x, want, 1e-12));
}

TEST(Encoder, SegmentsDoNotInteract) {
  Rng rng(56);
  auto model = Model<double>::random(small_model(1, 1, SelectionBudget::lossless()), rng, 0.3);
  const Matrix x = random_matrix(rng, 16, 8);
  Matrix y = x;
  for (std::size_t j = 0; j < 8; ++j) y(12, j) += 1.0;
  const Matrix a = initial_stage(x, model);
  const Matrix b = initial_stage(y, model);
  EXPECT_EQ(slice_rows(a, 0, 8), slice_rows(b, 0, 8));
  EXPECT_NE(slice_rows(a, 8, 16), slice_rows(b, 8, 16));
}

TEST(Encoder, LosslessMatchesUncompressed) {
  Rng rng(57);
  auto model = Model<double>::random(small_model(3, 1, SelectionBudget::lossless()), rng, 0.3);
  const Matrix x = random_matrix(rng, 21, 8);
  const auto out = encoder_forward(x, mask_at(21, {4, 11, 19}), model);
  EXPECT_TRUE(near(out.x, oracle::uncompressed_encoder(x, model), 1e-9));
  ASSERT_EQ(out.layers.size(), 2u);
  EXPECT_EQ(out.layers[0].components, 32u);
}

TEST(Encoder, MatchesDenseEncoder) {
  Rng rng(58);
  for (ScoringMode mode : {ScoringMode::projected, ScoringMode::simplified}) {
    for (bool normalized : {true, false}) {
      auto cfg = small_model(3, 1, SelectionBudget::two_resolution(4));
      cfg.scoring = mode;
      cfg.normalized_attention = normalized;
      cfg.segment_width = 16;
      auto model = Model<double>::random(cfg, rng, normalized ? 0.3 : 0.1);
      const Matrix x = random_matrix(rng, 64, 8, normalized ? 1.0 : 0.3);
      const auto mask = mask_at(64, {0, 7, 33, 63});
      const auto out = encoder_forward(x, mask, model);
      EXPECT_TRUE(near(out.x, oracle::dense_encoder(x, mask, model), 1e-8));
      for (const auto& d : out.layers) EXPECT_EQ(d.rows, 4u + 32 - 4 + 8);
    }
  }
}

TEST(Encoder, RestoresInputOrder) {
  auto cfg = small_model(1, 0, SelectionBudget::lossless());
  auto model = Model<double>{cfg, {LayerWeights<double>::zeros(cfg.layer)}};
  Matrix x(11, 8);
  for (std::size_t i = 0; i < 11; ++i) x(i, 0) = static_cast<double>(i);
  const auto out = encoder_forward(x, mask_at(11, {3, 8}), model);
  EXPECT_EQ(out.x, x);
}

TEST(Encoder, FloatTracksDouble) {
  Rng rng(59);
  auto cfg = small_model(2, 1, SelectionBudget::two_resolution(3));
  auto model = Model<double>::random(cfg, rng, 0.3);
  const Matrix x = random_matrix(rng, 40, 8);
  Model<float> fmodel{cfg, {}};
  for (const auto& w : model.weights) fmodel.weights.push_back(convert<float>(w));
  const auto mask = mask_at(40, {1, 20});
  const auto d = encoder_forward(x, mask, model);
  const auto f = encoder_forward(convert<float>(x), mask, fmodel);
  EXPECT_TRUE(near(convert<double>(f.x), d.x, 1e-4));
}

TEST(Encoder, InputErrors) {
  Rng rng(60);
  auto model = Model<double>::random(small_model(2, 0, SelectionBudget::lossless()), rng, 0.3);
  EXPECT_THROW(encoder_forward(Matrix(8, 4), mask_at(8, {0}), model), ShapeError);
  EXPECT_THROW(encoder_forward(Matrix(8, 8), mask_at(7, {0}), model), Error);
  EXPECT_THROW(encoder_forward(Matrix(8, 8), mask_at(8, {}), model), Error);
  auto bad = model;
  bad.weights.pop_back();
  EXPECT_THROW(encoder_forward(Matrix(8, 8), mask_at(8, {0}), bad), InvalidArgument);
}

TEST(ModelConfigFile, ParsesAndRoundTrips) {
  std::istringstream in(
      "# encoder\n"
      "layers = 6\n"
      "initial_layers = 2\n"
      "segment_width = 256\n"
      "k = 4\n"
      "budget = per_level:16=2,64=1\n"
      "scoring = simplified\n"
      "normalized_attention = off\n"
      "dim = 32\nheads = 4\nffn_dim = 64\n"
      "activation = gelu\nlayer_norm = true\nscore_scaling = false\n");
  const ModelConfig c = parse_model_config(in);
  EXPECT_EQ(c.layers, 6u);
  EXPECT_EQ(c.compressed_layers(), 4u);
  EXPECT_EQ(c.k, 4u);
  EXPECT_EQ(c.budget, SelectionBudget::per_level({{16, 2}, {64, 1}}));
  EXPECT_EQ(c.scoring, ScoringMode::simplified);
  EXPECT_FALSE(c.normalized_attention);
  EXPECT_EQ(c.layer.activation, Activation::gelu);
  EXPECT_TRUE(c.layer.use_layer_norm);
  EXPECT_FALSE(c.layer.score_scaling);

  std::stringstream buf;
  write_model_config(buf, c);
  const ModelConfig again = parse_model_config(buf);
  std::stringstream buf2;
  write_model_config(buf2, again);
  EXPECT_EQ(buf.str(), buf2.str());
}

TEST(ModelConfigFile, ErrorsCarryLineNumbers) {
  const auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_model_config(in);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return 999;
  };
  EXPECT_EQ(line_of("layers = 2\nwidth = 3\n"), 2u);
  EXPECT_EQ(line_of("\n\nk = two\n"), 3u);
  EXPECT_EQ(line_of("budget = half\n"), 1u);
  EXPECT_EQ(line_of("layers = 2\nlayers = 3\n"), 2u);
  EXPECT_EQ(line_of("layers\n"), 1u);
  EXPECT_EQ(line_of("layers = 1\ninitial_layers = 2\n"), 0u);
  EXPECT_EQ(line_of("dim = 10\nheads = 3\n"), 0u);
}
