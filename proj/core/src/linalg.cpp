#include "audiorank/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace audiorank {

namespace {
constexpr double kDegenerateNorm = 1e-12;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    raise(errc::dimension_mismatch, "dot of lengths " +
                                        std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const double> a,
                         std::span<const double> b) {
  if (a.size() != b.size()) {
    raise(errc::dimension_mismatch, "cosine of lengths " +
                                        std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < kDegenerateNorm || nb < kDegenerateNorm) {
    raise(errc::degenerate_vector,
          "vector norm below 1e-12 (" + std::to_string(std::min(na, nb)) + ")");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

DenseMatrix pairwise_cosine(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    raise(errc::dimension_mismatch, "inner dims " + std::to_string(a.cols()) +
                                        " and " + std::to_string(b.cols()));
  }
  std::vector<double> a_norms(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    a_norms[i] = l2_norm(a.row(i));
    if (a_norms[i] < kDegenerateNorm) {
      raise(errc::degenerate_vector, "row " + std::to_string(i) +
                                         " of left matrix has norm below 1e-12");
    }
  }
  std::vector<double> b_norms(b.rows());
  for (std::size_t j = 0; j < b.rows(); ++j) {
    b_norms[j] = l2_norm(b.row(j));
    if (b_norms[j] < kDegenerateNorm) {
      raise(errc::degenerate_vector,
            "row " + std::to_string(j) + " of right matrix has norm below 1e-12");
    }
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ra = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) =
          std::clamp(dot(ra, b.row(j)) / (a_norms[i] * b_norms[j]), -1.0, 1.0);
    }
  }
  return out;
}

ProbabilityVector stable_softmax(std::span<const double> scores,
                                 double temperature) {
  if (scores.empty()) raise(errc::empty_input, "softmax of empty vector");
  if (!(temperature > 0.0)) {
    raise(errc::non_positive_temperature,
          "temperature " + std::to_string(temperature));
  }
  double max_score = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) {
      raise(errc::non_finite_input, "non-finite softmax input");
    }
    max_score = std::max(max_score, s);
  }
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - max_score) / temperature);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return ProbabilityVector(std::move(out));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    raise(errc::dimension_mismatch, "matmul " + std::to_string(a.rows()) + "x" +
                                        std::to_string(a.cols()) + " by " +
                                        std::to_string(b.rows()) + "x" +
                                        std::to_string(b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  // i-k-j order keeps the k-reduction for each output entry sequential by
  // index while the inner loop stays contiguous.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.values().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* b_row = b.values().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

}  // namespace audiorank
