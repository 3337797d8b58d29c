#include "flare/learners/gbt.hpp"

#include <cmath>
#include <ostream>

#include "flare/error.hpp"
#include "flare/learners/logreg.hpp"
#include "flare/learners/model_io.hpp"

namespace flare {

namespace {

double mean_log_loss(std::span<const double> margin, std::span<const int> y) {
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = margin[i];
    // log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0
    const double s = y[i] ? -z : z;
    acc += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }
  return acc / static_cast<double>(y.size());
}

}  // namespace

GbtFit fit_gbt_traced(const Dataset& ds, const GbtParams& p) {
  ds.validate(true);
  if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "learning_rate must be in (0, 1]");
  if (p.max_depth <= 0) throw Error(ErrorKind::InvalidConfig, "max_depth must be positive");

  const std::size_t n = ds.size();
  const double prior = static_cast<double>(ds.positives()) / static_cast<double>(n);
  const double base = std::log(prior / (1.0 - prior));

  std::vector<double> F(n, base), resid(n), prob(n);
  GbtFit fit;
  fit.train_loss.push_back(mean_log_loss(F, ds.y));
  std::vector<DecisionTree> trees;
  trees.reserve(p.n_rounds);

  for (std::size_t round = 0; round < p.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = sigmoid(F[i]);
      resid[i] = static_cast<double>(ds.y[i]) - prob[i];
    }
    DecisionTree tree = fit_regression_tree(ds.X, resid, p.max_depth, p.min_leaf);

    auto& nodes = tree.mutable_nodes();
    std::vector<double> g(nodes.size(), 0.0), h(nodes.size(), 0.0);
    std::vector<std::size_t> leaf_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      leaf_of[i] = tree.leaf_index(ds.X.row(i));
      g[leaf_of[i]] += resid[i];
      h[leaf_of[i]] += prob[i] * (1.0 - prob[i]);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k].is_leaf()) nodes[k].value = g[k] / (h[k] + kHessianEps);

    for (std::size_t i = 0; i < n; ++i) F[i] += p.learning_rate * nodes[leaf_of[i]].value;
    fit.train_loss.push_back(mean_log_loss(F, ds.y));
    trees.push_back(std::move(tree));
  }
  fit.model = GbtModel(std::move(trees), base, p.learning_rate, ds.dims());
  return fit;
}

GbtModel fit_gbt(const Dataset& ds, const GbtParams& p) { return fit_gbt_traced(ds, p).model; }

double GbtModel::margin(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw Error(ErrorKind::DimensionMismatch, "gbt expects " + std::to_string(n_features_) +
                                                  " features, got " + std::to_string(x.size()));
  double F = base_score_;
  for (const auto& t : trees_) F += learning_rate_ * t.leaf_value(x);
  return F;
}

double GbtModel::predict_proba(std::span<const double> x) const { return sigmoid(margin(x)); }

void GbtModel::save(std::ostream& out) const {
  out << "gbt " << trees_.size() << ' ' << n_features_ << ' ' << hexfloat(base_score_) << ' '
      << hexfloat(learning_rate_) << '\n';
  for (const auto& t : trees_) t.save(out);
}

std::unique_ptr<Classifier> GbtModel::clone() const { return std::make_unique<GbtModel>(*this); }

}  // namespace flare
