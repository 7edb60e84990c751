#include <sstream>

#include "oracle.hpp"
#include "test_util.hpp"
#include "vcc/error.hpp"
#include "vcc/seq_tree.hpp"

using namespace vcc;
using vcc::testing::near;
using vcc::testing::random_matrix;

namespace {

std::vector<Component> all_components(std::size_t n_c, std::size_t k) {
  std::vector<Component> out;
  for (std::size_t s = 1; s <= n_c; s *= k)
    for (std::size_t x = 1; x <= n_c / s; ++x) out.push_back({s, x});
  return out;
}

}  // namespace

TEST(SeqTree, BuildExample) {
  const auto tree = SeqTree<double>::build(Matrix{{1}, {2}, {3}, {4}}, 2);
  EXPECT_EQ(tree.root()[0], 2.5);
  EXPECT_EQ(tree.delta({2, 1})[0], 1.0);
  EXPECT_EQ(tree.delta({2, 2})[0], -1.0);
  EXPECT_EQ(tree.delta({1, 1})[0], 0.5);
  EXPECT_EQ(tree.delta({1, 2})[0], -0.5);
  EXPECT_EQ(tree.delta({1, 3})[0], 0.5);
  EXPECT_EQ(tree.delta({1, 4})[0], -0.5);
  EXPECT_EQ(tree.node_count(), 7u);
  EXPECT_EQ(tree.depth(), 2u);
  EXPECT_THROW(tree.delta({4, 1}), InvalidArgument);
}

TEST(SeqTree, ConstantInputHasZeroDeltas) {
  const auto tree = SeqTree<double>::build(Matrix::filled(16, 3, 1.75), 4);
  for (const Component& c : all_components(16, 4)) {
    if (c.size == 16) continue;
    for (double v : tree.delta(c)) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(tree.root()[2], 1.75);
  EXPECT_EQ(tree.materialize(), Matrix::filled(16, 3, 1.75));
}

TEST(SeqTree, DeltasMatchDirectMeans) {
  Rng rng(31);
  const Matrix c = random_matrix(rng, 64, 8);
  const auto tree = SeqTree<double>::build(c, 2);
  for (const Component& comp : all_components(64, 2)) {
    if (comp.size == 64) continue;
    const auto parent = oracle::direct_mean(c, comp.parent(2));
    const auto node = oracle::direct_mean(c, comp);
    const auto delta = tree.delta(comp);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(delta[j], parent[j] - node[j], 1e-12);
  }
}

TEST(SeqTree, RetrieveExampleAndCounts) {
  const auto tree = SeqTree<double>::build(Matrix{{1}, {2}, {3}, {4}}, 2);
  RetrievalStats stats;
  EXPECT_EQ(tree.retrieve({4, 1}, &stats)[0], 2.5);
  EXPECT_EQ(stats.subtractions, 0u);
  stats = {};
  EXPECT_EQ(tree.retrieve({1, 4}, &stats)[0], 4.0);
  EXPECT_EQ(stats.subtractions, 2u);
  EXPECT_THROW(tree.retrieve({1, 5}), InvalidArgument);
  EXPECT_THROW(tree.retrieve({3, 1}), InvalidArgument);
}

TEST(SeqTree, RetrieveMatchesSegmentMeans) {
  Rng rng(32);
  for (std::size_t k : {2, 3, 4}) {
    const std::size_t n_c = k == 3 ? 81 : 64;
    const Matrix c = random_matrix(rng, n_c, 5);
    const auto tree = SeqTree<double>::build(c, k);
    for (const Component& comp : all_components(n_c, k)) {
      RetrievalStats stats;
      const auto got = tree.retrieve(comp, &stats);
      const auto want = segment_mean(c, comp);
      EXPECT_LE(stats.subtractions, tree.depth());
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
    }
  }
}

TEST(SeqTree, RoundTripAndSiblingSums) {
  Rng rng(33);
  const Matrix c = random_matrix(rng, 256, 4);
  const auto tree = SeqTree<double>::build(c, 4);
  EXPECT_TRUE(near(tree.materialize(), c, 1e-12));
  for (std::size_t s = 4; s <= 256; s *= 4)
    for (std::size_t x = 1; x <= 256 / s; ++x) {
      std::vector<double> sum(4, 0.0);
      for (std::size_t j = 0; j < 4; ++j) {
        const auto d = tree.delta(Component{s, x}.child(4, j));
        for (std::size_t t = 0; t < 4; ++t) sum[t] += d[t];
      }
      for (double v : sum) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(SeqTree, IntegerRoundTripIsExact) {
  Matrix c(8, 2);
  for (std::size_t i = 0; i < 8; ++i) c(i, 0) = double(i * i), c(i, 1) = -double(i);
  EXPECT_EQ(SeqTree<double>::build(c, 2).materialize(), c);
}

TEST(SeqTree, BuildRejectsNonPowerLength) {
  EXPECT_THROW(SeqTree<double>::build(Matrix(12, 1), 2), InvalidArgument);
  EXPECT_THROW(SeqTree<double>::build(Matrix(8, 1), 4), InvalidArgument);
}

TEST(SeqTreeUpdate, SingletonsGiveNewRowsExactly) {
  Rng rng(34);
  const Matrix c = random_matrix(rng, 16, 3);
  const Matrix c_new = random_matrix(rng, 16, 3);
  auto tree = SeqTree<double>::build(c, 2);
  const auto stats = tree.apply_update(ComponentSet::singletons(16, 2), c_new);
  EXPECT_TRUE(near(tree.materialize(), c_new, 1e-12));
  EXPECT_EQ(stats.writes, 31u);
}

TEST(SeqTreeUpdate, NoOpKeepsTree) {
  Rng rng(35);
  const Matrix c = random_matrix(rng, 32, 3);
  auto tree = SeqTree<double>::build(c, 2);
  const auto before = tree;
  const ComponentSet set({{8, 1}, {4, 3}, {2, 7}, {2, 8}, {16, 2}}, 32, 2);
  const auto plan = oracle::direct_compressed_rows(c, set);
  const auto stats = tree.apply_update(set, plan);
  EXPECT_GT(stats.writes, 0u);
  EXPECT_TRUE(near(tree.materialize(), before.materialize(), 1e-12));
}

TEST(SeqTreeUpdate, MixedPlanNodeSet) {
  Matrix c(8, 1);
  for (std::size_t i = 0; i < 8; ++i) c(i, 0) = double(i) + 0.5;
  auto tree = SeqTree<double>::build(c, 2);
  const auto before = tree;
  const ComponentSet set({{2, 1}, {1, 3}, {1, 4}, {4, 2}}, 8, 2);
  Matrix rows = oracle::direct_compressed_rows(c, set);
  for (std::size_t i = 0; i < rows.rows(); ++i) rows(i, 0) += 10.0 * double(i + 1);
  const auto stats = tree.apply_update(set, rows);

  std::vector<Component> written = stats.written;
  std::sort(written.begin(), written.end());
  std::vector<Component> expect{{1, 3}, {1, 4}, {2, 1}, {2, 2}, {4, 1}, {4, 2}, {8, 1}};
  EXPECT_EQ(written, expect);
  EXPECT_EQ(stats.writes, 7u);
  EXPECT_LE(stats.writes, 2 * set.size() + 1);
  EXPECT_EQ(tree.delta({1, 1})[0], before.delta({1, 1})[0]);
  EXPECT_EQ(tree.delta({1, 2})[0], before.delta({1, 2})[0]);

  // C_new = C + S_c† (rows − S_c C)
  const Matrix increments = subtract(rows, oracle::direct_compressed_rows(c, set));
  const auto dc = oracle::dense_compressed(set, 0);
  const Matrix expected = add(c, matmul(dc.S_pinv, increments));
  EXPECT_TRUE(near(tree.materialize(), expected, 1e-12));
}

TEST(SeqTreeUpdate, RandomCoversMatchDenseDecompression) {
  Rng rng(36);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(3);
    const std::size_t n_c = k == 2 ? 64 : (k == 3 ? 27 : 16);
    const Matrix c = random_matrix(rng, n_c, 4);
    // Random cover: split the root, then split each child with probability 0.5.
    std::vector<Component> open{{n_c, 1}}, set_items;
    while (!open.empty()) {
      Component cur = open.back();
      open.pop_back();
      if (cur.size > 1 && (cur.size == n_c || rng.uniform() < 0.5)) {
        for (std::size_t j = 0; j < k; ++j) open.push_back(cur.child(k, j));
      } else {
        set_items.push_back(cur);
      }
    }
    const ComponentSet set(set_items, n_c, k);
    const Matrix new_rows = random_matrix(rng, set.size(), 4);
    auto tree = SeqTree<double>::build(c, k);
    const auto stats = tree.apply_update(set, new_rows);
    EXPECT_LE(stats.writes, 2 * set.size() + 1);
    const Matrix inc = subtract(new_rows, oracle::direct_compressed_rows(c, set));
    const Matrix expected = add(c, matmul(oracle::dense_compressed(set, 0).S_pinv, inc));
    EXPECT_TRUE(near(tree.materialize(), expected, 1e-9));
  }
}

TEST(SeqTreeUpdate, RootOnly) {
  auto tree = SeqTree<double>::build(Matrix{{1}, {3}}, 2);
  const auto stats = tree.apply_update(ComponentSet::root(2, 2), Matrix{{4}});
  EXPECT_EQ(stats.writes, 1u);
  EXPECT_EQ(tree.materialize(), (Matrix{{3}, {5}}));
}

TEST(SeqTreeUpdate, Mismatches) {
  auto tree = SeqTree<double>::build(Matrix(8, 2), 2);
  EXPECT_THROW(tree.apply_update(ComponentSet::singletons(4, 2), Matrix(4, 2)), InvalidArgument);
  EXPECT_THROW(tree.apply_update(ComponentSet::singletons(8, 2), Matrix(8, 3)), ShapeError);
  EXPECT_THROW(tree.apply_update(ComponentSet::singletons(8, 2), Matrix(7, 2)), ShapeError);
}

TEST(SeqTreeSnapshot, RoundTripAndLayout) {
  Rng rng(37);
  const auto tree = SeqTree<double>::build(random_matrix(rng, 16, 3), 4);
  std::stringstream buf;
  tree.write(buf);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "VCCT");
  EXPECT_EQ(bytes.size(), 4u + 4u + 24u + 8u * 3u * (1 + 4 + 16));
  EXPECT_EQ(SeqTree<double>::read(buf), tree);

  std::stringstream cut(bytes.substr(0, 40));
  EXPECT_THROW(SeqTree<double>::read(cut), IoError);
}

TEST(SeqTree, FloatPrecision) {
  Rng rng(38);
  const Matrix c = random_matrix(rng, 64, 4);
  const auto tree = SeqTree<float>::build(convert<float>(c), 2);
  EXPECT_LE(max_abs_diff(convert<double>(tree.materialize()), c), 1e-5);
}
