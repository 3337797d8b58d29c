#pragma once

// CART trees. Classification trees split on Gini impurity decrease;
// regression trees (used by boosting) split on squared-error reduction.
// Split candidates are midpoints between consecutive distinct values.
// Ties go to the lowest feature index, then the lowest threshold.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flare/learners/classifier.hpp"
#include "flare/rng.hpp"

namespace flare {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: positive fraction (classification) or leaf weight
  std::uint32_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct TreeParams {
  int max_depth = 12;
  std::size_t min_leaf = 2;
  /// Features sampled per split; 0 means all features.
  std::size_t features_per_split = 0;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

inline constexpr double kSplitTieEps = 1e-12;

/// Gini impurity 1 - p^2 - (1-p)^2 from counts.
double gini(std::size_t positives, std::size_t total);

/// Best Gini split of `samples` over `features`, or nullopt when no split
/// decreases impurity with both children holding >= min_leaf samples.
std::optional<Split> best_gini_split(const Dataset& ds, std::span<const std::size_t> samples,
                                     std::span<const std::size_t> features, std::size_t min_leaf);

class DecisionTree : public Classifier {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
      : nodes_(std::move(nodes)), n_features_(n_features) {}

  using Classifier::predict_proba;
  double predict_proba(std::span<const double> x) const override;
  std::size_t n_features() const override { return n_features_; }
  void save(std::ostream& out) const override;
  std::unique_ptr<Classifier> clone() const override;

  /// Index of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;
  /// Raw leaf value (no clamping); regression trees use this.
  double leaf_value(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  std::size_t depth() const;

  bool operator==(const DecisionTree& o) const {
    return nodes_ == o.nodes_ && n_features_ == o.n_features_;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

/// Grows a classification tree on `samples` (all rows when empty; repeats
/// allowed for bootstrap). `rng` drives per-split feature sampling only.
DecisionTree fit_tree(const Dataset& ds, const TreeParams& params, Rng& rng,
                      std::span<const std::size_t> samples = {});

/// Squared-error regression tree on `targets` over all rows of X. Leaf
/// values are target means; callers may overwrite them.
DecisionTree fit_regression_tree(const Matrix& X, std::span<const double> targets,
                                 int max_depth, std::size_t min_leaf);

}  // namespace flare
