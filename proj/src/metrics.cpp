#include "flare/metrics.hpp"

#include <array>
#include <cmath>
#include <string>

#include "flare/error.hpp"

namespace flare {

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw Error(ErrorKind::LengthMismatch, "y_true has " + std::to_string(y_true.size()) +
                                               " entries, y_pred " + std::to_string(y_pred.size()));
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] != 0, p = y_pred[i] != 0;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (t && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf prf_from_counts(const Confusion& c) {
  Prf m;
  const auto pp = c.tp + c.fp, ap = c.tp + c.fn;
  if (pp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(pp);
  else m.degenerate = true;
  if (ap > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(ap);
  else m.degenerate = true;
  if (m.precision + m.recall > 0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.degenerate = true;
  return m;
}

Prf precision_recall_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  return prf_from_counts(confusion(y_true, y_pred));
}

double t_critical_95(std::size_t df) {
  static constexpr std::array<double, 30> table{
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) throw Error(ErrorKind::InvalidConfig, "t critical value needs df >= 1");
  return df <= table.size() ? table[df - 1] : 1.960;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "mean of empty sequence");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Interval ci95(std::span<const double> run_scores, bool strict_five_runs) {
  if (strict_five_runs && run_scores.size() != 5)
    throw Error(ErrorKind::WrongRunCount,
                "protocol requires 5 runs, got " + std::to_string(run_scores.size()));
  Interval iv;
  iv.mean = mean_of(run_scores);
  if (run_scores.size() < 2) return iv;
  const double n = static_cast<double>(run_scores.size());
  iv.half_width = t_critical_95(run_scores.size() - 1) * sample_std(run_scores) / std::sqrt(n);
  return iv;
}

}  // namespace flare
