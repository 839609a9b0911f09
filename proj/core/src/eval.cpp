#include "audiorank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace audiorank {

namespace {

MetricReport::Summary summarize(const std::vector<RunMetrics>& runs,
                                double RunMetrics::* field) {
  MetricReport::Summary s;
  if (runs.empty()) return s;
  double sum = 0.0;
  for (const auto& r : runs) sum += r.*field;
  s.mean = sum / static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) {
      const double d = r.*field - s.mean;
      ss += d * d;
    }
    s.sd = std::sqrt(ss / static_cast<double>(runs.size() - 1));
  }
  return s;
}

const std::set<std::string>& relevant_for(const Qrels& qrels,
                                          const std::string& query_id) {
  auto it = qrels.relevant.find(query_id);
  if (it == qrels.relevant.end() || it->second.empty()) {
    raise(errc::empty_relevant_set, "query '" + query_id + "'");
  }
  return it->second;
}

}  // namespace

RankedResult rank_items(std::span<const double> score_row,
                        const std::vector<std::string>& item_ids,
                        std::string query_id) {
  if (score_row.size() != item_ids.size()) {
    raise(errc::length_mismatch, std::to_string(score_row.size()) +
                                     " scores for " +
                                     std::to_string(item_ids.size()) + " items");
  }
  std::vector<std::size_t> order(item_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return score_row[a] > score_row[b];
                   });
  RankedResult out;
  out.query_id = std::move(query_id);
  out.item_ids.reserve(order.size());
  out.scores.reserve(order.size());
  for (std::size_t idx : order) {
    out.item_ids.push_back(item_ids[idx]);
    out.scores.push_back(score_row[idx]);
  }
  return out;
}

double average_precision_at_10(const RankedResult& ranked,
                               const std::set<std::string>& relevant) {
  if (relevant.empty()) raise(errc::empty_relevant_set, "empty relevant set");
  const std::size_t cutoff = std::min<std::size_t>(10, ranked.item_ids.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (relevant.count(ranked.item_ids[r]) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  const auto denom = std::min<std::size_t>(relevant.size(), 10);
  return sum / static_cast<double>(denom);
}

double recall_at_k(const RankedResult& ranked,
                   const std::set<std::string>& relevant, std::size_t k) {
  if (relevant.empty()) raise(errc::empty_relevant_set, "empty relevant set");
  if (k == 0) raise(errc::out_of_domain, "k must be >= 1");
  const std::size_t cutoff = std::min(k, ranked.item_ids.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (relevant.count(ranked.item_ids[r]) > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

MetricReport::Summary MetricReport::map10() const {
  return summarize(runs, &RunMetrics::map10);
}
MetricReport::Summary MetricReport::r1() const {
  return summarize(runs, &RunMetrics::r1);
}
MetricReport::Summary MetricReport::r5() const {
  return summarize(runs, &RunMetrics::r5);
}
MetricReport::Summary MetricReport::r10() const {
  return summarize(runs, &RunMetrics::r10);
}

std::vector<double> MetricReport::mean_per_query_ap() const {
  if (runs.empty()) return {};
  const std::size_t n = runs.front().per_query_ap.size();
  std::vector<double> mean(n, 0.0);
  for (const auto& run : runs) {
    if (run.per_query_ap.size() != n) {
      raise(errc::length_mismatch, "runs evaluated different query sets");
    }
    for (std::size_t i = 0; i < n; ++i) mean[i] += run.per_query_ap[i];
  }
  for (double& v : mean) v /= static_cast<double>(runs.size());
  return mean;
}

RunMetrics evaluate_scores(const DenseMatrix& scores,
                           const std::vector<std::string>& caption_ids,
                           const std::vector<std::string>& audio_ids,
                           const Qrels& qrels, RetrievalDirection direction) {
  if (scores.rows() != caption_ids.size() ||
      scores.cols() != audio_ids.size()) {
    raise(errc::shape_mismatch,
          "score matrix " + std::to_string(scores.rows()) + "x" +
              std::to_string(scores.cols()) + " vs " +
              std::to_string(caption_ids.size()) + " captions, " +
              std::to_string(audio_ids.size()) + " audios");
  }
  const bool text_query = direction == RetrievalDirection::text_to_audio;
  const auto& query_ids = text_query ? caption_ids : audio_ids;
  const auto& pool_ids = text_query ? audio_ids : caption_ids;

  RunMetrics metrics;
  metrics.query_ids = query_ids;
  metrics.per_query_ap.reserve(query_ids.size());
  double sum_ap = 0.0, sum_r1 = 0.0, sum_r5 = 0.0, sum_r10 = 0.0;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    const std::vector<double> row =
        text_query ? std::vector<double>(scores.row(q).begin(),
                                         scores.row(q).end())
                   : scores.col(q);
    const RankedResult ranked = rank_items(row, pool_ids, query_ids[q]);
    const auto& relevant = relevant_for(qrels, query_ids[q]);
    const double ap = average_precision_at_10(ranked, relevant);
    metrics.per_query_ap.push_back(ap);
    sum_ap += ap;
    sum_r1 += recall_at_k(ranked, relevant, 1);
    sum_r5 += recall_at_k(ranked, relevant, 5);
    sum_r10 += recall_at_k(ranked, relevant, 10);
  }
  const double n = static_cast<double>(query_ids.size());
  if (n > 0) {
    metrics.map10 = sum_ap / n;
    metrics.r1 = sum_r1 / n;
    metrics.r5 = sum_r5 / n;
    metrics.r10 = sum_r10 / n;
  }
  return metrics;
}

RunMetrics evaluate(const DualEncoder& model, const DenseMatrix& text_embeds,
                    const std::vector<std::string>& caption_ids,
                    const DenseMatrix& audio_embeds,
                    const std::vector<std::string>& audio_ids,
                    const Qrels& qrels, RetrievalDirection direction) {
  const DenseMatrix scores = score_matrix(model, text_embeds, audio_embeds);
  return evaluate_scores(scores, caption_ids, audio_ids, qrels, direction);
}

namespace {

/// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  raise(errc::numeric_failure, "incomplete beta did not converge");
}

/// Regularized incomplete beta I_x(a, b); cx = 1 - x is passed separately
/// so callers can supply it without cancellation.
double reg_inc_beta(double a, double b, double x, double cx) {
  if (x <= 0.0) return 0.0;
  if (cx <= 0.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) + b * std::log(cx);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(ln_front) * beta_cf(b, a, cx) / b;
}

}  // namespace

double student_t_sf(double t, std::size_t df) {
  if (df < 1) raise(errc::invalid_df, "df must be >= 1");
  if (!std::isfinite(t)) {
    if (std::isnan(t)) raise(errc::non_finite_input, "t is NaN");
    return t > 0.0 ? 0.0 : 1.0;
  }
  const double nu = static_cast<double>(df);
  const double t2 = t * t;
  // x = nu/(nu + t^2); its complement t^2/(nu + t^2) is formed directly.
  const double x = nu / (nu + t2);
  const double cx = t2 / (nu + t2);
  const double upper_tail = 0.5 * (1.0 - reg_inc_beta(0.5, nu / 2.0, cx, x));
  return t >= 0.0 ? upper_tail : 1.0 - upper_tail;
}

TTestResult paired_t_test(std::span<const double> a,
                          std::span<const double> b) {
  if (a.size() != b.size()) {
    raise(errc::length_mismatch, std::to_string(a.size()) + " vs " +
                                     std::to_string(b.size()) + " samples");
  }
  if (a.size() < 2) {
    raise(errc::length_mismatch, "need at least 2 paired samples");
  }
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  if (ss <= 0.0) {
    raise(errc::zero_variance, "all paired differences are equal");
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult result;
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.df = n - 1;
  result.p = 2.0 * student_t_sf(std::abs(result.t), result.df);
  return result;
}

}  // namespace audiorank
