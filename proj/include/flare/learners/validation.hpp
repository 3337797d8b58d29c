#pragma once

// Stratified k-fold splitting and exhaustive grid search.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flare/learners/classifier.hpp"

namespace flare {

using Fold = std::vector<std::size_t>;

/// k disjoint, ascending index folds covering 0..n-1. Each class is
/// shuffled with its own seeded stream and dealt round-robin, so every
/// fold holds floor or ceil of n_c / k members of class c.
/// Throws TooFewSamples when a class has fewer than k members.
std::vector<Fold> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed);

/// Complement of fold `f` within 0..n-1.
std::vector<std::size_t> complement(const Fold& fold, std::size_t n);

enum class ModelFamily { Forest, LogReg, Gbt };

std::string_view to_string(ModelFamily f);
ModelFamily parse_model_family(std::string_view s);

using HyperParams = std::map<std::string, double>;

std::string describe(const HyperParams& hp);

/// Trains a model of `family` using keys from `hp` over family defaults.
///   forest: n_trees max_depth min_leaf features_per_split bootstrap hard_vote
///   logreg: l2 max_iters tol standardize
///   gbt:    n_rounds learning_rate max_depth min_leaf
std::unique_ptr<Classifier> fit_model(ModelFamily family, const Dataset& ds,
                                      const HyperParams& hp, std::uint64_t seed);

std::vector<HyperParams> expand_grid(const std::map<std::string, std::vector<double>>& axes);
std::vector<HyperParams> default_grid(ModelFamily family);

struct GridRow {
  HyperParams params;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  HyperParams best;
  std::vector<GridRow> table;
};

/// Mean out-of-fold F1 (threshold 0.5) per grid point over shared folds;
/// the first of equal scores wins.
GridSearchResult grid_search(const Dataset& ds, ModelFamily family,
                             std::span<const HyperParams> grid, std::size_t k, std::uint64_t seed);

}  // namespace flare
