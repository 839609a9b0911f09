#pragma once

#include <string>
#include <vector>

#include "audiorank/matrix.hpp"

namespace audiorank {

/// Pairwise cosine similarity of caption sentence embeddings, with the
/// caption ids the rows/columns refer to.
struct SimilarityMatrix {
  DenseMatrix values;  // entries in [-1, 1]
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  void validate() const;
};

/// Target relevance per query-item pair, entries in [0, 1]. Column ids are
/// audio ids: column j stands for the audio annotated by caption j.
struct RelevanceMatrix {
  DenseMatrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

/// Monotone map from similarity in [-1,1] to relevance in [0,1].
struct RelevanceTransform {
  enum class Kind { logistic, min_max };

  Kind kind = Kind::logistic;
  double intercept = 2.73;
  double slope = 4.58;

  static RelevanceTransform logistic(double intercept = 2.73,
                                     double slope = 4.58) {
    return {Kind::logistic, intercept, slope};
  }
  static RelevanceTransform min_max() { return {Kind::min_max, 0.0, 0.0}; }

  double operator()(double h) const;
};

/// 1 / (1 + exp(intercept - slope*h)). Inputs outside [-1,1] by more than
/// 1e-9 are rejected; within the slack they are clamped.
double logistic_transform(double h, double intercept, double slope);

/// (h + 1) / 2 over the fixed theoretical cosine range.
double minmax_transform(double h);

SimilarityMatrix textual_similarity(const DenseMatrix& caption_embeds_a,
                                    const DenseMatrix& caption_embeds_b,
                                    std::vector<std::string> row_ids = {},
                                    std::vector<std::string> col_ids = {});

/// Elementwise transform of a similarity matrix. The diagonal of a square
/// matrix is treated like any other entry unless clamp_diagonal is set,
/// which pins it to relevance 1.
RelevanceMatrix relevance_matrix(const SimilarityMatrix& sim,
                                 const RelevanceTransform& transform,
                                 bool clamp_diagonal = false);

}  // namespace audiorank
