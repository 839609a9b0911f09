#pragma once

#include <span>

#include "audiorank/matrix.hpp"

namespace audiorank {

/// Reductions are sequential in index order so results are bit-reproducible
/// across runs and platforms with the same rounding mode.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Cosine similarity clamped to [-1, 1]. Requires equal dimensions and both
/// norms >= 1e-12 (near-zero vectors signal corrupt input).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Entry (i,j) = cosine_similarity(row i of a, row j of b).
DenseMatrix pairwise_cosine(const DenseMatrix& a, const DenseMatrix& b);

/// Max-subtracted softmax of scores/temperature.
ProbabilityVector stable_softmax(std::span<const double> scores,
                                 double temperature);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

}  // namespace audiorank
