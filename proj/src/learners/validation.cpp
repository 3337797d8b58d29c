#include "flare/learners/validation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "flare/error.hpp"
#include "flare/learners/forest.hpp"
#include "flare/learners/gbt.hpp"
#include "flare/learners/logreg.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"

namespace flare {

std::vector<Fold> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "k must be at least 2");
  std::vector<Fold> folds(k);
  std::size_t offset = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(i);
    if (members.size() < k)
      throw Error(ErrorKind::TooFewSamples, "class " + std::to_string(cls) + " has " +
                                                std::to_string(members.size()) + " samples, need " +
                                                std::to_string(k));
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(cls)}));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) folds[(offset + i) % k].push_back(members[i]);
    offset = (offset + members.size()) % k;
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> complement(const Fold& fold, std::size_t n) {
  std::vector<bool> held(n, false);
  for (auto i : fold) held[i] = true;
  std::vector<std::size_t> out;
  out.reserve(n - fold.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!held[i]) out.push_back(i);
  return out;
}

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Forest: return "forest";
    case ModelFamily::LogReg: return "logreg";
    case ModelFamily::Gbt: return "gbt";
  }
  return "forest";
}

ModelFamily parse_model_family(std::string_view s) {
  if (s == "forest") return ModelFamily::Forest;
  if (s == "logreg" || s == "MetaLR" || s == "lr") return ModelFamily::LogReg;
  if (s == "gbt" || s == "MetaXGB" || s == "xgb") return ModelFamily::Gbt;
  throw Error(ErrorKind::InvalidConfig, "unknown model family '" + std::string(s) + "'");
}

std::string describe(const HyperParams& hp) {
  std::string out;
  for (const auto& [k, v] : hp) {
    if (!out.empty()) out += ';';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += k + "=" + buf;
  }
  return out;
}

namespace {

class ParamReader {
 public:
  ParamReader(const HyperParams& hp, std::initializer_list<std::string_view> allowed) : hp_(hp) {
    for (const auto& [key, value] : hp) {
      (void)value;
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw Error(ErrorKind::InvalidConfig, "unknown hyperparameter '" + key + "'");
    }
  }
  double get(const std::string& key, double fallback) const {
    auto it = hp_.find(key);
    return it == hp_.end() ? fallback : it->second;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    if (v < 0) throw Error(ErrorKind::InvalidConfig, "hyperparameter '" + key + "' is negative");
    return static_cast<std::size_t>(v);
  }

 private:
  const HyperParams& hp_;
};

}  // namespace

std::unique_ptr<Classifier> fit_model(ModelFamily family, const Dataset& ds,
                                      const HyperParams& hp, std::uint64_t seed) {
  switch (family) {
    case ModelFamily::Forest: {
      ParamReader r(hp, {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap",
                         "hard_vote"});
      ForestParams p;
      p.n_trees = r.count("n_trees", p.n_trees);
      p.max_depth = static_cast<int>(r.count("max_depth", static_cast<std::size_t>(p.max_depth)));
      p.min_leaf = r.count("min_leaf", p.min_leaf);
      p.features_per_split = r.count("features_per_split", p.features_per_split);
      p.bootstrap = r.get("bootstrap", 1.0) != 0.0;
      p.hard_vote = r.get("hard_vote", 0.0) != 0.0;
      p.seed = seed;
      return std::make_unique<RandomForest>(fit_forest(ds, p));
    }
    case ModelFamily::LogReg: {
      ParamReader r(hp, {"l2", "max_iters", "tol", "standardize"});
      LogRegParams p;
      p.l2 = r.get("l2", p.l2);
      p.max_iters = r.count("max_iters", p.max_iters);
      p.tol = r.get("tol", p.tol);
      p.standardize = r.get("standardize", 1.0) != 0.0;
      return std::make_unique<LogisticModel>(fit_logreg(ds, p));
    }
    case ModelFamily::Gbt: {
      ParamReader r(hp, {"n_rounds", "learning_rate", "max_depth", "min_leaf"});
      GbtParams p;
      p.n_rounds = r.count("n_rounds", p.n_rounds);
      p.learning_rate = r.get("learning_rate", p.learning_rate);
      p.max_depth = static_cast<int>(r.count("max_depth", static_cast<std::size_t>(p.max_depth)));
      p.min_leaf = r.count("min_leaf", p.min_leaf);
      return std::make_unique<GbtModel>(fit_gbt(ds, p));
    }
  }
  throw Error(ErrorKind::InvalidConfig, "unknown model family");
}

std::vector<HyperParams> expand_grid(const std::map<std::string, std::vector<double>>& axes) {
  std::vector<HyperParams> out{HyperParams{}};
  for (const auto& [name, values] : axes) {
    if (values.empty()) throw Error(ErrorKind::EmptyGrid, "grid axis '" + name + "' is empty");
    std::vector<HyperParams> expanded;
    for (const auto& base : out)
      for (double v : values) {
        HyperParams hp = base;
        hp[name] = v;
        expanded.push_back(std::move(hp));
      }
    out = std::move(expanded);
  }
  return out;
}

std::vector<HyperParams> default_grid(ModelFamily family) {
  switch (family) {
    case ModelFamily::Forest: return expand_grid({{"n_trees", {50, 100}}, {"max_depth", {8, 12}}});
    case ModelFamily::LogReg: return expand_grid({{"l2", {0.01, 0.1, 1.0}}});
    case ModelFamily::Gbt:
      return expand_grid({{"learning_rate", {0.1, 0.3}}, {"n_rounds", {50, 100}}});
  }
  return {};
}

GridSearchResult grid_search(const Dataset& ds, ModelFamily family,
                             std::span<const HyperParams> grid, std::size_t k, std::uint64_t seed) {
  if (grid.empty()) throw Error(ErrorKind::EmptyGrid, "grid search over an empty grid");
  ds.validate(true);
  const auto folds = stratified_kfold(ds.y, k, seed);

  GridSearchResult result;
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridRow row;
    row.params = grid[g];
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto train_idx = complement(folds[f], ds.size());
      const Dataset train = ds.subset(train_idx);
      const Dataset test = ds.subset(folds[f]);
      auto model = fit_model(family, train, grid[g], derive_seed(seed, {f}));
      const auto proba = model->predict_proba(test.X);
      std::vector<int> pred(proba.size());
      for (std::size_t i = 0; i < proba.size(); ++i) pred[i] = proba[i] >= 0.5 ? 1 : 0;
      row.fold_f1.push_back(precision_recall_f1(test.y, pred).f1);
    }
    row.mean_f1 = mean_of(row.fold_f1);
    if (row.mean_f1 > best) {
      best = row.mean_f1;
      result.best_index = g;
    }
    result.table.push_back(std::move(row));
  }
  result.best = result.table[result.best_index].params;
  return result;
}

}  // namespace flare
