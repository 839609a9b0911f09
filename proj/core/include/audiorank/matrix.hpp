#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "audiorank/errors.hpp"

namespace audiorank {

/// Dense row-major matrix of 64-bit reals. Entries are validated to be
/// finite when constructed from existing data; in-place mutation through
/// accessors is the caller's responsibility.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  std::vector<double> col(std::size_t j) const;

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Discrete probability distribution: non-empty, entries in [0,1],
/// summing to 1 within 1e-9. Validated on construction.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  std::span<const double> span() const noexcept { return entries_; }

  /// Delta distribution with all mass on `index`.
  static ProbabilityVector one_hot(std::size_t length, std::size_t index);

 private:
  std::vector<double> entries_;
};

}  // namespace audiorank
