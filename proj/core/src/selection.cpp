#include "vcc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vcc/vip_layout.hpp"

namespace vcc {

std::string to_string(ScoringMode mode) {
  return mode == ScoringMode::projected ? "projected" : "simplified";
}

ScoringMode parse_scoring_mode(const std::string& name) {
  if (name == "projected") return ScoringMode::projected;
  if (name == "simplified") return ScoringMode::simplified;
  throw InvalidArgument("unknown scoring mode '" + name + "' (expected projected|simplified)");
}

SelectionBudget SelectionBudget::per_level(std::map<std::size_t, std::size_t> splits) {
  SelectionBudget b;
  b.kind_ = Kind::per_level;
  b.splits_ = std::move(splits);
  return b;
}

SelectionBudget SelectionBudget::two_resolution(std::size_t h) {
  SelectionBudget b;
  b.kind_ = Kind::two_resolution;
  b.amount_ = h;
  return b;
}

SelectionBudget SelectionBudget::lossless() {
  SelectionBudget b;
  b.kind_ = Kind::lossless;
  return b;
}

SelectionBudget SelectionBudget::fixed_rows(std::size_t components) {
  if (components == 0) throw InvalidArgument("fixed_rows budget needs at least one component");
  SelectionBudget b;
  b.kind_ = Kind::fixed_rows;
  b.amount_ = components;
  return b;
}

namespace {

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw InvalidArgument("budget: bad " + what + " '" + text + "'");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

SelectionBudget SelectionBudget::parse(const std::string& text) {
  if (text == "lossless") return lossless();
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("budget: expected lossless, two_resolution:H, rows:N or "
                          "per_level:S=H,... but got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "two_resolution") return two_resolution(parse_count(rest, "h"));
  if (kind == "rows") return fixed_rows(parse_count(rest, "row count"));
  if (kind != "per_level") throw InvalidArgument("budget: unknown kind '" + kind + "'");
  std::map<std::size_t, std::size_t> splits;
  std::stringstream items(rest);
  std::string item;
  while (std::getline(items, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("budget: per_level entry '" + item + "' is not S=H");
    }
    const std::size_t s = parse_count(item.substr(0, eq), "segment size");
    if (!splits.emplace(s, parse_count(item.substr(eq + 1), "split count")).second) {
      throw InvalidArgument("budget: segment size " + std::to_string(s) + " given twice");
    }
  }
  return per_level(std::move(splits));
}

std::string SelectionBudget::describe() const {
  switch (kind_) {
    case Kind::lossless:
      return "lossless";
    case Kind::two_resolution:
      return "two_resolution:" + std::to_string(amount_);
    case Kind::fixed_rows:
      return "rows:" + std::to_string(amount_);
    case Kind::per_level:
      break;
  }
  std::string out = "per_level:";
  bool first = true;
  for (const auto& [s, h] : splits_) {
    if (!first) out += ',';
    out += std::to_string(s) + "=" + std::to_string(h);
    first = false;
  }
  return out;
}

std::vector<std::size_t> SelectionBudget::schedule(std::size_t n_c, std::size_t k) const {
  const std::size_t levels = exact_log(n_c, k);
  std::vector<std::size_t> out(levels, 0);

  if (kind_ == Kind::per_level) {
    for (const auto& [s, h] : splits_) {
      if (s < k || s > n_c || !is_power_of(s, k)) {
        throw BudgetError("budget: segment size " + std::to_string(s) +
                              " is not a splittable level of n_c=" + std::to_string(n_c) +
                              ", k=" + std::to_string(k),
                          s);
      }
      out[levels - exact_log(s, k)] = h;
    }
  } else if (kind_ == Kind::fixed_rows) {
    const std::size_t internal = (n_c - 1) / (k - 1);
    std::size_t remaining = std::min(internal, (amount_ - 1 + (k - 2)) / (k - 1));
    std::size_t cap = 1;
    for (std::size_t l = 0; l < levels && remaining > 0; ++l) {
      // Most splits the levels below can absorb per split made here.
      std::size_t below = 0;
      std::size_t span = 1;
      for (std::size_t j = l + 1; j < levels; ++j) {
        span *= k;
        below += span;
      }
      const std::size_t even = (remaining + (levels - l) - 1) / (levels - l);
      const std::size_t needed = (remaining + below) / (below + 1);
      const std::size_t h = std::min({cap, remaining, std::max(even, needed)});
      out[l] = h;
      remaining -= h;
      cap = h * k;
    }
    return out;
  }

  std::size_t candidates = 1;
  std::size_t size = n_c;
  for (std::size_t l = 0; l < levels; ++l, size /= k) {
    std::size_t& h = out[l];
    if (kind_ == Kind::lossless) {
      h = candidates;
    } else if (kind_ == Kind::two_resolution) {
      h = l + 1 < levels ? candidates : amount_;
    }
    if (h > candidates) {
      throw BudgetError("budget: " + std::to_string(h) + " splits requested at segment size " +
                            std::to_string(size) + " but only " + std::to_string(candidates) +
                            " candidates exist",
                        size);
    }
    candidates = h * k;
  }
  if (kind_ == Kind::two_resolution && levels == 0 && amount_ > 0) {
    throw BudgetError("budget: nothing to split in a single-row sequence", 1);
  }
  return out;
}

std::size_t SelectionBudget::component_count(std::size_t n_c, std::size_t k) const {
  const auto plan = schedule(n_c, k);
  return 1 + (k - 1) * std::accumulate(plan.begin(), plan.end(), std::size_t{0});
}

template <std::floating_point T>
std::vector<T> score_components(const BasicMatrix<T>& vip, const BasicMatrix<T>& means,
                                const LayerWeights<T>& w, ScoringMode mode,
                                const std::vector<bool>& excluded) {
  if (vip.cols() != means.cols()) {
    throw ShapeError("score_components: VIP rows " + vip.shape() + " vs means " +
                     means.shape());
  }
  if (!excluded.empty() && excluded.size() != means.rows()) {
    throw ShapeError("score_components: exclusion mask length " +
                     std::to_string(excluded.size()) + " for " +
                     std::to_string(means.rows()) + " candidates");
  }
  std::vector<T> scores(means.rows(), -std::numeric_limits<T>::infinity());
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < means.rows(); ++j)
    if (excluded.empty() || !excluded[j]) active.push_back(j);
  if (active.empty() || vip.rows() == 0) return scores;
  const BasicMatrix<T> keys = gather_rows(means, active);

  std::vector<T> total(active.size(), T(0));
  if (mode == ScoringMode::projected) {
    const std::size_t heads = w.config.heads;
    for (std::size_t h = 0; h < heads; ++h) {
      const BasicMatrix<T> probs = softmax_rows(head_logits(vip, keys, w, h));
      for (std::size_t i = 0; i < probs.rows(); ++i)
        for (std::size_t j = 0; j < probs.cols(); ++j) total[j] += probs(i, j);
    }
    const T count = static_cast<T>(heads * vip.rows());
    for (T& v : total) v /= count;
  } else {
    const BasicMatrix<T> logits = matmul_transposed(vip, keys);
    const T peak = *std::max_element(logits.values().begin(), logits.values().end());
    const T safe = std::log(std::numeric_limits<T>::max()) / T(2);
    const T shift = peak > safe ? peak : T(0);
    for (std::size_t i = 0; i < logits.rows(); ++i)
      for (std::size_t j = 0; j < logits.cols(); ++j) total[j] += std::exp(logits(i, j) - shift);
  }
  for (std::size_t a = 0; a < active.size(); ++a) scores[active[a]] = total[a];
  return scores;
}

template <std::floating_point T>
Selection<T> select_components(const BasicMatrix<T>& vip, const SeqTree<T>& tree,
                               const SelectionBudget& budget, const LayerWeights<T>& w,
                               const SelectionOptions& options) {
  const std::size_t n_c = tree.leaves();
  const std::size_t k = tree.branching();
  const std::size_t d = tree.dim();
  if (vip.cols() != d) {
    throw ShapeError("select_components: VIP rows " + vip.shape() + " for a tree of width " +
                     std::to_string(d));
  }
  const std::vector<std::size_t> plan = budget.schedule(n_c, k);

  Selection<T> out;
  std::vector<Component> current{Component{n_c, 1}};
  BasicMatrix<T> means(1, d, std::vector<T>(tree.root().begin(), tree.root().end()));
  ++out.stats.retrievals;

  std::vector<Component> chosen;
  std::vector<T> chosen_rows;
  auto keep = [&](std::size_t i) {
    chosen.push_back(current[i]);
    auto row = means.row(i);
    chosen_rows.insert(chosen_rows.end(), row.begin(), row.end());
  };

  for (std::size_t level = 0; level < plan.size() && plan[level] > 0; ++level) {
    const std::size_t m = current.size();
    const std::size_t h = plan[level];
    std::vector<bool> split(m, h >= m);
    if (h < m) {
      std::vector<bool> padded(m);
      for (std::size_t i = 0; i < m; ++i) padded[i] = current[i].first() >= options.real_rows;
      const std::vector<T> scores = score_components(vip, means, w, options.mode, padded);
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      for (std::size_t i = 0; i < h; ++i) split[order[i]] = true;
    }

    std::vector<Component> next;
    next.reserve(h * k);
    BasicMatrix<T> next_means(h * k, d);
    for (std::size_t i = 0; i < m; ++i) {
      if (!split[i]) {
        keep(i);
        continue;
      }
      for (std::size_t j = 0; j < k; ++j) {
        const Component child = current[i].child(k, j);
        tree.child_mean(means.row(i), child, next_means.row(next.size()), &out.stats);
        next.push_back(child);
      }
    }
    current = std::move(next);
    means = std::move(next_means);
  }
  for (std::size_t i = 0; i < current.size(); ++i) keep(i);

  std::vector<std::size_t> order(chosen.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return chosen[a].first() < chosen[b].first();
  });
  std::vector<Component> sorted;
  out.rows = BasicMatrix<T>(chosen.size(), d);
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.push_back(chosen[order[i]]);
    std::copy_n(chosen_rows.data() + order[i] * d, d, out.rows.row(i).data());
  }
  out.set = ComponentSet(std::move(sorted), n_c, k);
  return out;
}

template <std::floating_point T>
CompressionPlan<T> build_plan(const ComponentSet& set, const SeqTree<T>& tree,
                              std::size_t vip_rows) {
  if (set.n_c() != tree.leaves() || set.k() != tree.branching()) {
    throw InvalidArgument("build_plan: set over n_c=" + std::to_string(set.n_c()) +
                          ", k=" + std::to_string(set.k()) + " but tree has n_c=" +
                          std::to_string(tree.leaves()) + ", k=" +
                          std::to_string(tree.branching()));
  }
  CompressionPlan<T> plan{set, set.multiplicities(), BasicMatrix<T>(set.size(), tree.dim()),
                          vip_rows};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::vector<T> mean = tree.retrieve(set[i]);
    std::copy(mean.begin(), mean.end(), plan.compressed_rows.row(i).begin());
  }
  return plan;
}

#define VCC_INSTANTIATE(T)                                                                   \
  template std::vector<T> score_components(const BasicMatrix<T>&, const BasicMatrix<T>&,     \
                                           const LayerWeights<T>&, ScoringMode,              \
                                           const std::vector<bool>&);                        \
  template Selection<T> select_components(const BasicMatrix<T>&, const SeqTree<T>&,          \
                                          const SelectionBudget&, const LayerWeights<T>&,    \
                                          const SelectionOptions&);                          \
  template CompressionPlan<T> build_plan(const ComponentSet&, const SeqTree<T>&, std::size_t);

VCC_INSTANTIATE(float)
VCC_INSTANTIATE(double)

}  // namespace vcc
