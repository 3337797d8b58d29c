#pragma once

// Binary classification metrics and the run-level confidence interval.

#include <span>
#include <vector>

namespace flare {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when a zero denominator forced a metric to 0.
  bool degenerate = false;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred);
Prf prf_from_counts(const Confusion& c);
Prf precision_recall_f1(std::span<const int> y_true, std::span<const int> y_pred);

/// Two-sided 95% Student-t critical value for `df` degrees of freedom
/// (tabulated for df <= 30, normal approximation above).
double t_critical_95(std::size_t df);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
};

/// mean +- t * s / sqrt(n) with the sample standard deviation s. With
/// `strict_five_runs` the run count must be exactly 5 (WrongRunCount).
Interval ci95(std::span<const double> run_scores, bool strict_five_runs = false);

double sample_std(std::span<const double> v);
double mean_of(std::span<const double> v);

}  // namespace flare
