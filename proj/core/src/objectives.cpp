#include "audiorank/objectives.hpp"

#include <cmath>
#include <string>

#include "audiorank/linalg.hpp"

namespace audiorank {

void LossConfig::validate() const {
  if (!(omega > 0.0)) {
    raise(errc::non_positive_temperature, "omega " + std::to_string(omega));
  }
  if (!(tau > 0.0)) {
    raise(errc::non_positive_temperature, "tau " + std::to_string(tau));
  }
}

ProbabilityVector target_distribution(std::span<const double> relevance_row,
                                      double omega) {
  return stable_softmax(relevance_row, omega);
}

ProbabilityVector predicted_distribution(std::span<const double> score_row,
                                         double tau) {
  return stable_softmax(score_row, tau);
}

double listnet_loss(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.size() != q.size()) {
    raise(errc::length_mismatch, "distributions of lengths " +
                                     std::to_string(p.size()) + " and " +
                                     std::to_string(q.size()));
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    if (!(q[j] > 0.0)) {
      raise(errc::out_of_domain,
            "q[" + std::to_string(j) + "] = " + std::to_string(q[j]) +
                " with positive target mass");
    }
    loss -= p[j] * std::log(q[j]);
  }
  return loss;
}

namespace {

void check_square_pair(const DenseMatrix& relevance,
                       const DenseMatrix& scores) {
  if (!relevance.same_shape(scores)) {
    raise(errc::shape_mismatch,
          "relevance " + std::to_string(relevance.rows()) + "x" +
              std::to_string(relevance.cols()) + " vs scores " +
              std::to_string(scores.rows()) + "x" +
              std::to_string(scores.cols()));
  }
  if (scores.rows() != scores.cols()) {
    raise(errc::non_square_batch, "in-batch list of " +
                                      std::to_string(scores.rows()) + "x" +
                                      std::to_string(scores.cols()));
  }
}

/// Mean over rows of CE(softmax(G row/omega), softmax(S row/tau)) and the
/// gradient (q - p) / (tau * n) accumulated into grad.
double listnet_rows(const DenseMatrix& relevance, const DenseMatrix& scores,
                    double omega, double tau, DenseMatrix& grad) {
  const std::size_t n = scores.rows();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ProbabilityVector p = target_distribution(relevance.row(i), omega);
    const ProbabilityVector q = predicted_distribution(scores.row(i), tau);
    loss += listnet_loss(p, q);
    for (std::size_t j = 0; j < n; ++j) {
      grad(i, j) += (q[j] - p[j]) / (tau * static_cast<double>(n));
    }
  }
  return loss / static_cast<double>(n);
}

double listnet_cols(const DenseMatrix& relevance, const DenseMatrix& scores,
                    double omega, double tau, DenseMatrix& grad) {
  const std::size_t n = scores.cols();
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const ProbabilityVector p =
        target_distribution(relevance.col(j), omega);
    const ProbabilityVector q = predicted_distribution(scores.col(j), tau);
    loss += listnet_loss(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      grad(i, j) += (q[i] - p[i]) / (tau * static_cast<double>(n));
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace

LossResult listnet_direction_loss(const DenseMatrix& relevance,
                                  const DenseMatrix& scores,
                                  const LossConfig& config) {
  config.validate();
  check_square_pair(relevance, scores);
  LossResult result;
  result.grad_scores = DenseMatrix(scores.rows(), scores.cols());
  switch (config.direction) {
    case LossDirection::audio:
      result.loss = listnet_rows(relevance, scores, config.omega, config.tau,
                                 result.grad_scores);
      break;
    case LossDirection::text:
      result.loss = listnet_cols(relevance, scores, config.omega, config.tau,
                                 result.grad_scores);
      break;
    case LossDirection::audio_plus_text:
      result.loss = listnet_rows(relevance, scores, config.omega, config.tau,
                                 result.grad_scores) +
                    listnet_cols(relevance, scores, config.omega, config.tau,
                                 result.grad_scores);
      break;
  }
  return result;
}

LossResult infonce_loss(const DenseMatrix& scores, double tau) {
  if (!(tau > 0.0)) {
    raise(errc::non_positive_temperature, "tau " + std::to_string(tau));
  }
  if (scores.rows() != scores.cols()) {
    raise(errc::shape_mismatch, "InfoNCE needs a square score matrix, got " +
                                    std::to_string(scores.rows()) + "x" +
                                    std::to_string(scores.cols()));
  }
  const std::size_t n = scores.rows();
  LossResult result;
  result.grad_scores = DenseMatrix(n, n);
  double row_loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ProbabilityVector q = stable_softmax(scores.row(i), tau);
    row_loss -= std::log(q[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double delta = (i == j) ? 1.0 : 0.0;
      result.grad_scores(i, j) +=
          0.5 * (q[j] - delta) / (tau * static_cast<double>(n));
    }
  }
  double col_loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const ProbabilityVector q = stable_softmax(scores.col(j), tau);
    col_loss -= std::log(q[j]);
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = (i == j) ? 1.0 : 0.0;
      result.grad_scores(i, j) +=
          0.5 * (q[i] - delta) / (tau * static_cast<double>(n));
    }
  }
  result.loss = 0.5 * (row_loss + col_loss) / static_cast<double>(n);
  return result;
}

LossResult evaluate_objective(const DenseMatrix& relevance,
                              const DenseMatrix& scores,
                              const LossConfig& config) {
  if (config.objective == ObjectiveKind::infonce) {
    return infonce_loss(scores, config.tau);
  }
  return listnet_direction_loss(relevance, scores, config);
}

bool degenerate_equivalence_check(const DenseMatrix& scores, double tau,
                                  double tol) {
  if (scores.rows() != scores.cols()) {
    raise(errc::shape_mismatch, "square score matrix required");
  }
  const std::size_t n = scores.rows();
  // ListNet in both directions with P forced to one-hot (binary relevance,
  // all mass on the annotated pair), routed through the generic machinery.
  double listnet_both = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    listnet_both += listnet_loss(ProbabilityVector::one_hot(n, i),
                                 predicted_distribution(scores.row(i), tau));
  }
  for (std::size_t j = 0; j < n; ++j) {
    listnet_both += listnet_loss(ProbabilityVector::one_hot(n, j),
                                 predicted_distribution(scores.col(j), tau));
  }
  listnet_both /= static_cast<double>(n);
  const double infonce = infonce_loss(scores, tau).loss;
  return std::abs(listnet_both - 2.0 * infonce) <= tol;
}

}  // namespace audiorank
