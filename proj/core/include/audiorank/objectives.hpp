#pragma once

#include <span>

#include "audiorank/matrix.hpp"

namespace audiorank {

enum class LossDirection { audio, text, audio_plus_text };
enum class ObjectiveKind { listnet, infonce };

struct LossConfig {
  double omega = 0.05;  // target temperature
  double tau = 0.05;    // prediction temperature
  LossDirection direction = LossDirection::audio;
  ObjectiveKind objective = ObjectiveKind::listnet;

  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  DenseMatrix grad_scores;  // dL/dS, same shape as the score matrix
};

/// Top-one probability of each item for a query, from target relevances.
ProbabilityVector target_distribution(std::span<const double> relevance_row,
                                      double omega);

/// Same softmax kernel applied to predicted scores.
ProbabilityVector predicted_distribution(std::span<const double> score_row,
                                         double tau);

/// Cross-entropy -sum p ln q (natural log). Terms with p == 0 contribute 0.
double listnet_loss(const ProbabilityVector& p, const ProbabilityVector& q);

/// Listwise loss over in-batch lists. Audio direction treats each row
/// (caption query) as a list over audios; text direction each column (audio
/// query) as a list over captions; audio_plus_text is their unweighted sum.
/// Losses are means over lists; grad_scores is the matching exact gradient.
LossResult listnet_direction_loss(const DenseMatrix& relevance,
                                  const DenseMatrix& scores,
                                  const LossConfig& config);

/// Symmetric contrastive baseline with the diagonal as positives:
/// 0.5 * (mean_i -ln softmax(S[i,:]/tau)_i + mean_j -ln softmax(S[:,j]/tau)_j).
LossResult infonce_loss(const DenseMatrix& scores, double tau);

/// Routes to ListNet (using `relevance`) or InfoNCE (ignoring it).
LossResult evaluate_objective(const DenseMatrix& relevance,
                              const DenseMatrix& scores,
                              const LossConfig& config);

/// Verifies that ListNet in both directions with explicit one-hot targets
/// equals twice the symmetric InfoNCE value, within tol.
bool degenerate_equivalence_check(const DenseMatrix& scores, double tau,
                                  double tol = 1e-9);

}  // namespace audiorank
