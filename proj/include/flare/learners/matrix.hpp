#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flare {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void append_row(std::span<const double> values);
  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix hstack(const Matrix& right) const;

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Binary-labelled design matrix.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> feature_names;

  std::size_t size() const { return X.rows(); }
  std::size_t dims() const { return X.cols(); }
  std::size_t positives() const;

  /// Shape, label and finiteness checks. `require_both_classes` adds the
  /// training precondition (throws SingleClass).
  void validate(bool require_both_classes = true) const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace flare
