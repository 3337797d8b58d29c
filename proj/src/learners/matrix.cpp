#include "flare/learners/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "flare/error.hpp"

namespace flare {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_)
    throw Error(ErrorKind::DimensionMismatch,
                "row of width " + std::to_string(values.size()) + " into matrix of width " +
                    std::to_string(cols_));
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::hstack(const Matrix& right) const {
  if (rows_ != right.rows_)
    throw Error(ErrorKind::DimensionMismatch, "hstack of matrices with different row counts");
  Matrix out(rows_, cols_ + right.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto dst = out.row(r);
    std::copy(row(r).begin(), row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(cols_));
  }
  return out;
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

void Dataset::validate(bool require_both_classes) const {
  if (X.rows() != y.size())
    throw Error(ErrorKind::LengthMismatch, "X has " + std::to_string(X.rows()) + " rows, y has " +
                                               std::to_string(y.size()));
  if (X.rows() < 2) throw Error(ErrorKind::InvalidDataset, "need at least 2 samples");
  if (!feature_names.empty() && feature_names.size() != X.cols())
    throw Error(ErrorKind::DimensionMismatch, "feature_names width differs from X");
  for (int label : y)
    if (label != 0 && label != 1) throw Error(ErrorKind::InvalidDataset, "labels must be 0/1");
  for (double v : X.data())
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidDataset, "non-finite feature value");
  if (require_both_classes) {
    const auto pos = positives();
    if (pos == 0 || pos == y.size())
      throw Error(ErrorKind::SingleClass, "training requires both classes");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.X = X.select_rows(indices);
  out.y.reserve(indices.size());
  for (auto i : indices) out.y.push_back(y[i]);
  out.feature_names = feature_names;
  return out;
}

}  // namespace flare
