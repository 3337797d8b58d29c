#pragma once

#include "flare/learners/tree.hpp"

namespace flare {

struct GbtParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;  // (0, 1]
  int max_depth = 3;
  std::size_t min_leaf = 1;
};

inline constexpr double kHessianEps = 1e-9;

/// Logistic-loss gradient boosting. Each round fits a squared-error tree to
/// the residuals y - sigmoid(F) and replaces its leaf values with the Newton
/// step sum(residual) / (sum(p(1-p)) + eps).
class GbtModel : public Classifier {
 public:
  GbtModel() = default;
  GbtModel(std::vector<DecisionTree> trees, double base_score, double learning_rate,
           std::size_t n_features)
      : trees_(std::move(trees)), base_score_(base_score), learning_rate_(learning_rate),
        n_features_(n_features) {}

  using Classifier::predict_proba;
  double predict_proba(std::span<const double> x) const override;
  std::size_t n_features() const override { return n_features_; }
  void save(std::ostream& out) const override;
  std::unique_ptr<Classifier> clone() const override;

  /// Raw additive score F(x) (log-odds).
  double margin(std::span<const double> x) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }

 private:
  std::vector<DecisionTree> trees_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  std::size_t n_features_ = 0;
};

struct GbtFit {
  GbtModel model;
  /// Mean training log-loss: entry 0 at the base score, entry t after round t.
  std::vector<double> train_loss;
};

GbtFit fit_gbt_traced(const Dataset& ds, const GbtParams& p = {});
GbtModel fit_gbt(const Dataset& ds, const GbtParams& p = {});

}  // namespace flare
