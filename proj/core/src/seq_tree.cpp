#include "vcc/seq_tree.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"
#include "vcc/vip_layout.hpp"

namespace vcc {

namespace {

constexpr std::uint32_t kSnapshotVersion = 1;

// Node values known at one level during an update, ascending by index.
template <std::floating_point T>
struct Frontier {
  std::vector<std::size_t> index;
  std::vector<const T*> value;
};

}  // namespace

template <std::floating_point T>
SeqTree<T> SeqTree<T>::build(const BasicMatrix<T>& rows, std::size_t k) {
  if (!is_power_of(rows.rows(), k)) {
    throw InvalidArgument("SeqTree: length " + std::to_string(rows.rows()) +
                          " is not a power of k=" + std::to_string(k));
  }
  SeqTree tree;
  tree.n_c_ = rows.rows();
  tree.k_ = k;
  tree.d_ = rows.cols();
  tree.depth_ = exact_log(rows.rows(), k);
  tree.deltas_.resize(tree.depth_);

  const std::size_t d = tree.d_;
  std::vector<T> means(rows.values().begin(), rows.values().end());
  std::size_t count = tree.n_c_;
  for (std::size_t level = 0; level < tree.depth_; ++level) {
    const std::size_t parents = count / k;
    std::vector<T> parent_means(parents * d, T(0));
    for (std::size_t x = 0; x < count; ++x) {
      T* dst = parent_means.data() + (x / k) * d;
      const T* src = means.data() + x * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    for (T& v : parent_means) v /= static_cast<T>(k);
    std::vector<T>& deltas = tree.deltas_[level];
    deltas.resize(count * d);
    for (std::size_t x = 0; x < count; ++x) {
      const T* parent = parent_means.data() + (x / k) * d;
      const T* node = means.data() + x * d;
      T* dst = deltas.data() + x * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] = parent[j] - node[j];
    }
    means = std::move(parent_means);
    count = parents;
  }
  tree.root_ = std::move(means);
  return tree;
}

template <std::floating_point T>
std::size_t SeqTree<T>::node_count() const noexcept {
  std::size_t total = 1;
  for (const auto& level : deltas_) total += d_ ? level.size() / d_ : 0;
  return total;
}

template <std::floating_point T>
std::size_t SeqTree<T>::level_of(const Component& c) const {
  validate_component(c, n_c_, k_);
  return exact_log(c.size, k_);
}

template <std::floating_point T>
std::span<const T> SeqTree<T>::delta(const Component& c) const {
  const std::size_t level = level_of(c);
  if (level == depth_) throw InvalidArgument("SeqTree: the root has no delta");
  return {delta_row(level, c.index), d_};
}

template <std::floating_point T>
std::vector<T> SeqTree<T>::retrieve(const Component& c, RetrievalStats* stats) const {
  const std::size_t level = level_of(c);
  std::vector<T> value = root_;
  // Ancestor of c at level l has index ⌈x / k^(l-level)⌉.
  std::size_t span = c.size == n_c_ ? 1 : n_c_ / (c.size * k_);
  for (std::size_t l = depth_; l-- > level; span /= k_) {
    const std::size_t index = (c.index - 1) / span + 1;
    const T* delta = delta_row(l, index);
    for (std::size_t j = 0; j < d_; ++j) value[j] -= delta[j];
    if (stats) ++stats->subtractions;
  }
  if (stats) ++stats->retrievals;
  return value;
}

template <std::floating_point T>
void SeqTree<T>::child_mean(std::span<const T> parent_mean, const Component& child,
                            std::span<T> out, RetrievalStats* stats) const {
  const std::size_t level = level_of(child);
  if (level == depth_) throw InvalidArgument("SeqTree: the root has no parent");
  if (parent_mean.size() != d_ || out.size() != d_) {
    throw ShapeError("SeqTree::child_mean: expected rows of width " + std::to_string(d_));
  }
  const T* delta = delta_row(level, child.index);
  for (std::size_t j = 0; j < d_; ++j) out[j] = parent_mean[j] - delta[j];
  if (stats) {
    ++stats->retrievals;
    ++stats->subtractions;
  }
}

template <std::floating_point T>
UpdateStats SeqTree<T>::apply_update(const ComponentSet& set, const BasicMatrix<T>& new_rows) {
  if (set.n_c() != n_c_ || set.k() != k_) {
    throw InvalidArgument("apply_update: component set for n_c=" + std::to_string(set.n_c()) +
                          ", k=" + std::to_string(set.k()) + " does not match tree n_c=" +
                          std::to_string(n_c_) + ", k=" + std::to_string(k_));
  }
  if (new_rows.rows() != set.size() || new_rows.cols() != d_) {
    throw ShapeError("apply_update: rows " + new_rows.shape() + " for " +
                     std::to_string(set.size()) + " components of width " +
                     std::to_string(d_));
  }
  require_finite(new_rows, "apply_update");

  UpdateStats stats;
  if (set.size() == 1) {  // J = {root}
    std::copy_n(new_rows.row(0).data(), d_, root_.data());
    stats.writes = 1;
    stats.written.push_back({n_c_, 1});
    return stats;
  }

  // Selected components grouped by level, each list ascending by index
  // because the set is in positional order.
  std::vector<Frontier<T>> selected(depth_);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t level = exact_log(set[i].size, k_);
    selected[level].index.push_back(set[i].index);
    selected[level].value.push_back(new_rows.row(i).data());
  }

  // Dirty parents produced at the previous level; their means live in carry_means.
  std::vector<T> carry_means;
  Frontier<T> dirty;
  std::size_t size = 1;
  for (std::size_t level = 0; level < depth_; ++level, size *= k_) {
    const Frontier<T>& picked = selected[level];
    Frontier<T> nodes;
    nodes.index.reserve(picked.index.size() + dirty.index.size());
    nodes.value.reserve(nodes.index.capacity());
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < picked.index.size() || b < dirty.index.size()) {
      const bool take_picked =
          b == dirty.index.size() ||
          (a < picked.index.size() && picked.index[a] < dirty.index[b]);
      if (take_picked) {
        nodes.index.push_back(picked.index[a]);
        nodes.value.push_back(picked.value[a++]);
      } else {
        nodes.index.push_back(dirty.index[b]);
        nodes.value.push_back(dirty.value[b++]);
      }
    }

    std::vector<T> parent_means;
    std::vector<std::size_t> parent_index;
    parent_means.reserve((nodes.index.size() / k_ + 1) * d_);
    for (std::size_t start = 0; start < nodes.index.size(); start += k_) {
      const std::size_t parent = (nodes.index[start] - 1) / k_ + 1;
      // A valid cover supplies all k siblings of every dirty parent.
      if (start + k_ > nodes.index.size() || (nodes.index[start] - 1) % k_ != 0 ||
          nodes.index[start + k_ - 1] != nodes.index[start] + k_ - 1) {
        throw InvalidArgument("apply_update: incomplete sibling group under a dirty node");
      }
      const std::size_t offset = parent_means.size();
      parent_means.resize(offset + d_, T(0));
      T* mean = parent_means.data() + offset;
      for (std::size_t c = 0; c < k_; ++c) {
        const T* child = nodes.value[start + c];
        for (std::size_t j = 0; j < d_; ++j) mean[j] += child[j];
      }
      for (std::size_t j = 0; j < d_; ++j) mean[j] /= static_cast<T>(k_);
      for (std::size_t c = 0; c < k_; ++c) {
        const std::size_t index = nodes.index[start + c];
        const T* child = nodes.value[start + c];
        T* delta = delta_row(level, index);
        for (std::size_t j = 0; j < d_; ++j) delta[j] = mean[j] - child[j];
        ++stats.writes;
        stats.written.push_back({size, index});
      }
      parent_index.push_back(parent);
    }

    carry_means = std::move(parent_means);
    dirty.index = std::move(parent_index);
    dirty.value.clear();
    for (std::size_t i = 0; i < dirty.index.size(); ++i)
      dirty.value.push_back(carry_means.data() + i * d_);
  }

  if (dirty.index.size() != 1) {
    throw InvalidArgument("apply_update: updates did not converge to the root");
  }
  std::copy_n(dirty.value[0], d_, root_.data());
  ++stats.writes;
  stats.written.push_back({n_c_, 1});
  return stats;
}

template <std::floating_point T>
BasicMatrix<T> SeqTree<T>::materialize() const {
  std::vector<T> values = root_;
  std::size_t count = 1;
  for (std::size_t level = depth_; level-- > 0;) {
    const std::size_t children = count * k_;
    std::vector<T> next(children * d_);
    for (std::size_t x = 0; x < children; ++x) {
      const T* parent = values.data() + (x / k_) * d_;
      const T* delta = deltas_[level].data() + x * d_;
      T* dst = next.data() + x * d_;
      for (std::size_t j = 0; j < d_; ++j) dst[j] = parent[j] - delta[j];
    }
    values = std::move(next);
    count = children;
  }
  return BasicMatrix<T>(n_c_, d_, std::move(values));
}

template <std::floating_point T>
void SeqTree<T>::write(std::ostream& out) const {
  detail::write_magic(out, "VCCT");
  detail::write_le<std::uint32_t>(out, kSnapshotVersion);
  detail::write_le<std::uint64_t>(out, n_c_);
  detail::write_le<std::uint64_t>(out, k_);
  detail::write_le<std::uint64_t>(out, d_);
  detail::write_reals<T>(out, root_);
  for (std::size_t level = depth_; level-- > 0;) detail::write_reals<T>(out, deltas_[level]);
  if (!out) throw IoError("failed writing tree snapshot");
}

template <std::floating_point T>
SeqTree<T> SeqTree<T>::read(std::istream& in) {
  detail::expect_magic(in, "VCCT");
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kSnapshotVersion) {
    throw IoError("unsupported tree snapshot version " + std::to_string(version));
  }
  SeqTree tree;
  tree.n_c_ = detail::read_le<std::uint64_t>(in, "n_c");
  tree.k_ = detail::read_le<std::uint64_t>(in, "k");
  tree.d_ = detail::read_le<std::uint64_t>(in, "d");
  if (!is_power_of(tree.n_c_, tree.k_)) throw IoError("tree snapshot: n_c is not a power of k");
  tree.depth_ = exact_log(tree.n_c_, tree.k_);
  tree.root_.resize(tree.d_);
  detail::read_reals<T>(in, tree.root_, "root");
  tree.deltas_.resize(tree.depth_);
  for (std::size_t level = tree.depth_; level-- > 0;) {
    std::size_t count = tree.n_c_;
    for (std::size_t l = 0; l < level; ++l) count /= tree.k_;
    tree.deltas_[level].resize(count * tree.d_);
    detail::read_reals<T>(in, tree.deltas_[level], "delta level");
  }
  return tree;
}

template class SeqTree<float>;
template class SeqTree<double>;

}  // namespace vcc
