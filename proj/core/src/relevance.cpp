#include "audiorank/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "audiorank/linalg.hpp"

namespace audiorank {

namespace {
constexpr double kDomainSlack = 1e-9;

double checked_similarity(double h) {
  if (!std::isfinite(h) || h < -1.0 - kDomainSlack || h > 1.0 + kDomainSlack) {
    raise(errc::out_of_domain,
          "similarity " + std::to_string(h) + " outside [-1,1]");
  }
  return std::clamp(h, -1.0, 1.0);
}
}  // namespace

void SimilarityMatrix::validate() const {
  if (!row_ids.empty() && row_ids.size() != values.rows()) {
    raise(errc::shape_mismatch, "row id count != rows");
  }
  if (!col_ids.empty() && col_ids.size() != values.cols()) {
    raise(errc::shape_mismatch, "col id count != cols");
  }
  for (double v : values.values()) {
    if (!(v >= -1.0 && v <= 1.0)) {
      raise(errc::out_of_domain,
            "similarity entry " + std::to_string(v) + " outside [-1,1]");
    }
  }
  if (!row_ids.empty() && row_ids == col_ids) {
    for (std::size_t i = 0; i < values.rows(); ++i) {
      if (std::abs(values(i, i) - 1.0) > 1e-9) {
        raise(errc::out_of_domain,
              "self-similarity " + std::to_string(values(i, i)) + " at row " +
                  std::to_string(i));
      }
      for (std::size_t j = i + 1; j < values.cols(); ++j) {
        if (std::abs(values(i, j) - values(j, i)) > 1e-9) {
          raise(errc::out_of_domain, "asymmetric similarity at (" +
                                         std::to_string(i) + "," +
                                         std::to_string(j) + ")");
        }
      }
    }
  }
}

double RelevanceTransform::operator()(double h) const {
  return kind == Kind::logistic ? logistic_transform(h, intercept, slope)
                                : minmax_transform(h);
}

double logistic_transform(double h, double intercept, double slope) {
  const double hc = checked_similarity(h);
  return 1.0 / (1.0 + std::exp(intercept - slope * hc));
}

double minmax_transform(double h) {
  const double hc = checked_similarity(h);
  return (hc + 1.0) / 2.0;
}

SimilarityMatrix textual_similarity(const DenseMatrix& caption_embeds_a,
                                    const DenseMatrix& caption_embeds_b,
                                    std::vector<std::string> row_ids,
                                    std::vector<std::string> col_ids) {
  SimilarityMatrix sim{pairwise_cosine(caption_embeds_a, caption_embeds_b),
                       std::move(row_ids), std::move(col_ids)};
  sim.validate();
  return sim;
}

RelevanceMatrix relevance_matrix(const SimilarityMatrix& sim,
                                 const RelevanceTransform& transform,
                                 bool clamp_diagonal) {
  const DenseMatrix& h = sim.values;
  DenseMatrix g(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      g(i, j) = transform(h(i, j));
    }
  }
  if (clamp_diagonal) {
    for (std::size_t i = 0; i < std::min(g.rows(), g.cols()); ++i) {
      g(i, i) = 1.0;
    }
  }
  return RelevanceMatrix{std::move(g), sim.row_ids, sim.col_ids};
}

}  // namespace audiorank
