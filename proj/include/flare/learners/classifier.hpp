#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "flare/learners/matrix.hpp"

namespace flare {

/// Binary probabilistic classifier. Trained models are immutable and safe
/// for concurrent inference.
class Classifier {
 public:
  virtual ~Classifier() = default;

  /// P(y = 1 | x), always in [0, 1].
  virtual double predict_proba(std::span<const double> x) const = 0;
  virtual std::size_t n_features() const = 0;
  /// Writes the model as field-tagged text records (see model_io.hpp).
  virtual void save(std::ostream& out) const = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;

  /// Row-wise predict_proba; throws DimensionMismatch on width mismatch.
  virtual std::vector<double> predict_proba(const Matrix& X) const;
};

}  // namespace flare
