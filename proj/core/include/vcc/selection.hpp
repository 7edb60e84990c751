#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vcc/components.hpp"
#include "vcc/matrix.hpp"
#include "vcc/seq_tree.hpp"
#include "vcc/transformer.hpp"

namespace vcc {

enum class ScoringMode {
  /// Per-head softmax attention of the VIP rows over a level's candidates,
  /// averaged over heads and VIP rows.
  projected,
  /// μ = Σ_i exp(⟨P_i, c⟩) on raw embeddings.
  simplified,
};

std::string to_string(ScoringMode mode);
ScoringMode parse_scoring_mode(const std::string& name);

/// How many components to split at each resolution.
///
/// Every kind resolves to a schedule: entry ℓ is the number of splits among
/// the candidates of segment size n_c/k^ℓ, root first. A schedule with total
/// H splits yields 1 + (k-1)·H components.
class SelectionBudget {
 public:
  enum class Kind { per_level, two_resolution, lossless, fixed_rows };

  /// h_s keyed by the segment size s being split; missing sizes split nothing.
  static SelectionBudget per_level(std::map<std::size_t, std::size_t> splits);
  /// Split everything down to size k, then h of the size-k segments into
  /// singletons: n_c/k - h + h·k components.
  static SelectionBudget two_resolution(std::size_t h);
  /// Split everything: J is all singletons.
  static SelectionBudget lossless();
  /// About `components` components, splits spread evenly over the levels.
  static SelectionBudget fixed_rows(std::size_t components);

  /// Inverse of describe(): "lossless", "two_resolution:H", "rows:N" or
  /// "per_level:S=H,S=H,...". Throws InvalidArgument.
  static SelectionBudget parse(const std::string& text);
  std::string describe() const;

  Kind kind() const noexcept { return kind_; }
  /// h for two_resolution, the component target for fixed_rows.
  std::size_t amount() const noexcept { return amount_; }
  const std::map<std::size_t, std::size_t>& splits() const noexcept { return splits_; }

  /// Throws BudgetError naming the first level that cannot supply its splits.
  std::vector<std::size_t> schedule(std::size_t n_c, std::size_t k) const;
  /// |J| produced by schedule(n_c, k).
  std::size_t component_count(std::size_t n_c, std::size_t k) const;

  friend bool operator==(const SelectionBudget&, const SelectionBudget&) = default;

 private:
  Kind kind_ = Kind::two_resolution;
  std::size_t amount_ = 0;
  std::map<std::size_t, std::size_t> splits_;
};

/// Split-priority scores for candidate segment means (one row each); higher
/// splits first. `excluded` rows (fully padded segments) score -inf and take
/// no part in the normalization. Scores of one call share a common shift, so
/// only their order is meaningful in simplified mode.
template <std::floating_point T>
std::vector<T> score_components(const BasicMatrix<T>& vip, const BasicMatrix<T>& means,
                                const LayerWeights<T>& w, ScoringMode mode,
                                const std::vector<bool>& excluded = {});

struct SelectionOptions {
  ScoringMode mode = ScoringMode::projected;
  /// Rows of C that are real tokens; components starting at or after this
  /// row are padding. Defaults to all rows.
  std::size_t real_rows = static_cast<std::size_t>(-1);
};

template <std::floating_point T>
struct Selection {
  ComponentSet set;
  /// Segment mean of set[i] in row i.
  BasicMatrix<T> rows;
  RetrievalStats stats;
};

/// Coarse-to-fine refinement from the root: at each level the top-h_s
/// candidates (ties to the smaller x) are split into their k children.
template <std::floating_point T>
Selection<T> select_components(const BasicMatrix<T>& vip, const SeqTree<T>& tree,
                               const SelectionBudget& budget, const LayerWeights<T>& w,
                               const SelectionOptions& options = {});

template <std::floating_point T>
struct CompressionPlan {
  ComponentSet set;
  /// Diagonal of D.
  std::vector<std::size_t> multiplicities;
  /// S_c C, |J| × d.
  BasicMatrix<T> compressed_rows;

  std::size_t vip_rows = 0;
  /// r = n_p + |J|.
  std::size_t rows() const noexcept { return vip_rows + set.size(); }
};

/// Retrieves every component mean of `set` from `tree`.
template <std::floating_point T>
CompressionPlan<T> build_plan(const ComponentSet& set, const SeqTree<T>& tree,
                              std::size_t vip_rows = 0);

}  // namespace vcc
