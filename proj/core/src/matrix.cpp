#include "audiorank/matrix.hpp"

#include <cmath>
#include <string>

namespace audiorank {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    raise(errc::shape_mismatch,
          "value count " + std::to_string(values_.size()) + " != " +
              std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      raise(errc::non_finite_input,
            "non-finite entry at row " + std::to_string(i / cols_) +
                ", col " + std::to_string(i % cols_));
    }
  }
}

DenseMatrix DenseMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) {
      raise(errc::shape_mismatch, "ragged row lengths");
    }
    values.insert(values.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), cols, std::move(values));
}

std::vector<double> DenseMatrix::col(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

bool DenseMatrix::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ProbabilityVector::ProbabilityVector(std::vector<double> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) raise(errc::empty_input, "empty probability vector");
  double sum = 0.0;
  for (double p : entries_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      raise(errc::out_of_domain,
            "probability entry " + std::to_string(p) + " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    raise(errc::out_of_domain,
          "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ProbabilityVector ProbabilityVector::one_hot(std::size_t length,
                                             std::size_t index) {
  if (length == 0) raise(errc::empty_input, "one_hot of length 0");
  if (index >= length) {
    raise(errc::index_out_of_range, "one_hot index " + std::to_string(index) +
                                        " >= " + std::to_string(length));
  }
  std::vector<double> e(length, 0.0);
  e[index] = 1.0;
  return ProbabilityVector(std::move(e));
}

}  // namespace audiorank
