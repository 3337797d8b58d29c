#pragma once

#include "flare/learners/classifier.hpp"

namespace flare {

struct LogRegParams {
  double l2 = 0.1;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
  /// z-score features with training statistics before fitting.
  bool standardize = true;
};

double sigmoid(double z);

/// Mean binary cross-entropy + l2 * |w|^2 / 2 and its gradient, on
/// already-standardized inputs.
struct LogisticObjective {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};
LogisticObjective logistic_objective(const Matrix& X, std::span<const int> y,
                                     std::span<const double> w, double b, double l2);

class LogisticModel : public Classifier {
 public:
  LogisticModel() = default;
  LogisticModel(std::vector<double> weights, double bias, double l2, std::vector<double> mean,
                std::vector<double> scale)
      : weights_(std::move(weights)), bias_(bias), l2_(l2), mean_(std::move(mean)),
        scale_(std::move(scale)) {}

  using Classifier::predict_proba;
  double predict_proba(std::span<const double> x) const override;
  std::size_t n_features() const override { return weights_.size(); }
  void save(std::ostream& out) const override;
  std::unique_ptr<Classifier> clone() const override;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  double l2() const { return l2_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

  bool converged = false;
  std::size_t iterations = 0;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  double l2_ = 0.0;
  std::vector<double> mean_;   // standardization offset
  std::vector<double> scale_;  // standardization divisor
};

/// Full-batch gradient descent with Armijo backtracking; converged when the
/// gradient infinity-norm drops below tol. On NonConvergence the lowest-loss
/// iterate is returned with `converged == false`.
LogisticModel fit_logreg(const Dataset& ds, const LogRegParams& p = {});

}  // namespace flare
