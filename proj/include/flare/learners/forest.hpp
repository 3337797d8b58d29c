#pragma once

#include <cstdint>

#include "flare/learners/tree.hpp"

namespace flare {

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = 12;
  std::size_t min_leaf = 2;
  /// 0 selects ceil(sqrt(d)).
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  /// Hard vote: fraction of trees whose leaf probability exceeds 0.5.
  /// Default is the soft vote (mean leaf probability).
  bool hard_vote = false;

  std::size_t resolved_features(std::size_t d) const;
};

class RandomForest : public Classifier {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::size_t n_features, bool hard_vote)
      : trees_(std::move(trees)), n_features_(n_features), hard_vote_(hard_vote) {}

  using Classifier::predict_proba;
  double predict_proba(std::span<const double> x) const override;
  /// OpenMP over rows.
  std::vector<double> predict_proba(const Matrix& X) const override;
  std::size_t n_features() const override { return n_features_; }
  void save(std::ostream& out) const override;
  std::unique_ptr<Classifier> clone() const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  bool hard_vote() const { return hard_vote_; }
  bool operator==(const RandomForest& o) const {
    return trees_ == o.trees_ && n_features_ == o.n_features_ && hard_vote_ == o.hard_vote_;
  }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  bool hard_vote_ = false;
};

/// Trees are grown in parallel; tree t draws its bootstrap sample and
/// feature subsets from derive_seed(seed, {t}).
RandomForest fit_forest(const Dataset& ds, const ForestParams& p);
/// Serial reference; produces the same forest as fit_forest().
RandomForest fit_forest_serial(const Dataset& ds, const ForestParams& p);

}  // namespace flare
