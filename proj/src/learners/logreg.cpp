#include "flare/learners/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "flare/error.hpp"
#include "flare/learners/model_io.hpp"

namespace flare {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double max_abs(std::span<const double> v, double extra) {
  double m = std::abs(extra);
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LogisticObjective logistic_objective(const Matrix& X, std::span<const int> y,
                                     std::span<const double> w, double b, double l2) {
  const std::size_t n = X.rows(), d = X.cols();
  LogisticObjective obj;
  obj.grad_w.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = X.row(i);
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
    // BCE with logits: y=1 -> softplus(-z), y=0 -> softplus(z)
    obj.loss += y[i] ? softplus(-z) : softplus(z);
    const double r = sigmoid(z) - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < d; ++j) obj.grad_w[j] += r * x[j];
    obj.grad_b += r;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  obj.loss *= inv_n;
  obj.grad_b *= inv_n;
  double sq = 0;
  for (std::size_t j = 0; j < d; ++j) {
    obj.grad_w[j] = obj.grad_w[j] * inv_n + l2 * w[j];
    sq += w[j] * w[j];
  }
  obj.loss += 0.5 * l2 * sq;
  return obj;
}

LogisticModel fit_logreg(const Dataset& ds, const LogRegParams& p) {
  ds.validate(true);
  if (p.l2 < 0) throw Error(ErrorKind::InvalidConfig, "l2 must be non-negative");
  const std::size_t n = ds.size(), d = ds.dims();

  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  if (p.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0, s2 = 0;
      for (std::size_t i = 0; i < n; ++i) s += ds.X(i, j);
      mean[j] = s / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) s2 += (ds.X(i, j) - mean[j]) * (ds.X(i, j) - mean[j]);
      const double sd = std::sqrt(s2 / static_cast<double>(n));
      scale[j] = sd > 1e-12 ? sd : 1.0;
    }
  }
  Matrix Z(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) Z(i, j) = (ds.X(i, j) - mean[j]) / scale[j];

  std::vector<double> w(d, 0.0), w_try(d);
  double b = 0.0;
  auto obj = logistic_objective(Z, ds.y, w, b, p.l2);
  std::vector<double> best_w = w;
  double best_b = b, best_loss = obj.loss;
  double step = 1.0;
  bool converged = false;
  std::size_t iter = 0;

  for (; iter < p.max_iters; ++iter) {
    if (max_abs(obj.grad_w, obj.grad_b) < p.tol) {
      converged = true;
      break;
    }
    double gnorm2 = obj.grad_b * obj.grad_b;
    for (double g : obj.grad_w) gnorm2 += g * g;

    step = std::min(step * 2.0, 1e6);
    LogisticObjective next;
    double b_try = b;
    while (true) {
      for (std::size_t j = 0; j < d; ++j) w_try[j] = w[j] - step * obj.grad_w[j];
      b_try = b - step * obj.grad_b;
      next = logistic_objective(Z, ds.y, w_try, b_try, p.l2);
      if (next.loss <= obj.loss - 1e-4 * step * gnorm2 || step < 1e-12) break;
      step *= 0.5;
    }
    if (next.loss > obj.loss) break;  // no descent possible at machine precision
    w = w_try;
    b = b_try;
    obj = std::move(next);
    if (obj.loss < best_loss) {
      best_loss = obj.loss;
      best_w = w;
      best_b = b;
    }
  }
  if (!converged && max_abs(obj.grad_w, obj.grad_b) < p.tol) converged = true;

  LogisticModel model(converged ? w : best_w, converged ? b : best_b, p.l2, std::move(mean),
                      std::move(scale));
  model.converged = converged;
  model.iterations = iter;
  return model;
}

double LogisticModel::predict_proba(std::span<const double> x) const {
  if (x.size() != weights_.size())
    throw Error(ErrorKind::DimensionMismatch, "logistic model expects " +
                                                  std::to_string(weights_.size()) + " features");
  double z = bias_;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights_[j] * (x[j] - mean_[j]) / scale_[j];
  return sigmoid(z);
}

void LogisticModel::save(std::ostream& out) const {
  out << "logreg " << weights_.size() << ' ' << hexfloat(bias_) << ' ' << hexfloat(l2_) << '\n';
  auto row = [&](const char* tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ' ' << hexfloat(x);
    out << '\n';
  };
  row("weights", weights_);
  row("mean", mean_);
  row("scale", scale_);
}

std::unique_ptr<Classifier> LogisticModel::clone() const {
  return std::make_unique<LogisticModel>(*this);
}

}  // namespace flare
