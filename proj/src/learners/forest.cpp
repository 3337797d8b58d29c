#include "flare/learners/forest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>

#include "flare/error.hpp"

namespace flare {

std::size_t ForestParams::resolved_features(std::size_t d) const {
  if (features_per_split == 0)
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
  if (features_per_split > d)
    throw Error(ErrorKind::InvalidConfig, "features_per_split exceeds feature count");
  return features_per_split;
}

namespace {

void check_params(const Dataset& ds, const ForestParams& p) {
  ds.validate(true);
  if (p.n_trees == 0) throw Error(ErrorKind::InvalidConfig, "n_trees must be positive");
  if (p.max_depth <= 0 || p.min_leaf == 0)
    throw Error(ErrorKind::InvalidConfig, "max_depth and min_leaf must be positive");
}

DecisionTree grow_member(const Dataset& ds, const ForestParams& p, const TreeParams& tp,
                         std::size_t t) {
  Rng rng(derive_seed(p.seed, {t}));
  std::vector<std::size_t> sample(ds.size());
  if (p.bootstrap) {
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    for (auto& s : sample) s = pick(rng);
  } else {
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  }
  return fit_tree(ds, tp, rng, sample);
}

TreeParams tree_params(const Dataset& ds, const ForestParams& p) {
  return TreeParams{p.max_depth, p.min_leaf, p.resolved_features(ds.dims())};
}

}  // namespace

RandomForest fit_forest_serial(const Dataset& ds, const ForestParams& p) {
  check_params(ds, p);
  const TreeParams tp = tree_params(ds, p);
  std::vector<DecisionTree> trees;
  trees.reserve(p.n_trees);
  for (std::size_t t = 0; t < p.n_trees; ++t) trees.push_back(grow_member(ds, p, tp, t));
  return RandomForest(std::move(trees), ds.dims(), p.hard_vote);
}

RandomForest fit_forest(const Dataset& ds, const ForestParams& p) {
  check_params(ds, p);
  const TreeParams tp = tree_params(ds, p);
  std::vector<DecisionTree> trees(p.n_trees);
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(p.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      trees[static_cast<std::size_t>(t)] = grow_member(ds, p, tp, static_cast<std::size_t>(t));
    } catch (...) {
#pragma omp critical(flare_forest_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return RandomForest(std::move(trees), ds.dims(), p.hard_vote);
}

double RandomForest::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw Error(ErrorKind::DimensionMismatch, "forest expects " + std::to_string(n_features_) +
                                                  " features, got " + std::to_string(x.size()));
  if (trees_.empty()) return 0.0;
  double acc = 0;
  for (const auto& t : trees_) {
    const double p = t.predict_proba(x);
    acc += hard_vote_ ? (p > 0.5 ? 1.0 : 0.0) : p;
  }
  return std::clamp(acc / static_cast<double>(trees_.size()), 0.0, 1.0);
}

std::vector<double> RandomForest::predict_proba(const Matrix& X) const {
  if (X.cols() != n_features_)
    throw Error(ErrorKind::DimensionMismatch, "forest expects " + std::to_string(n_features_) +
                                                  " features, got " + std::to_string(X.cols()));
  std::vector<double> out(X.rows());
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    out[static_cast<std::size_t>(r)] = predict_proba(X.row(static_cast<std::size_t>(r)));
  return out;
}

void RandomForest::save(std::ostream& out) const {
  out << "forest " << trees_.size() << ' ' << n_features_ << ' ' << (hard_vote_ ? 1 : 0) << '\n';
  for (const auto& t : trees_) t.save(out);
}

std::unique_ptr<Classifier> RandomForest::clone() const {
  return std::make_unique<RandomForest>(*this);
}

}  // namespace flare
