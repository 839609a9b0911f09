#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "audiorank/matrix.hpp"
#include "audiorank/projection.hpp"

namespace audiorank {

/// Query id -> ids of relevant items. Every set must be non-empty and
/// resolve against the evaluated pool.
struct Qrels {
  std::map<std::string, std::set<std::string>> relevant;
};

/// Item ids in descending score order; ties broken by ascending input index.
struct RankedResult {
  std::string query_id;
  std::vector<std::string> item_ids;
  std::vector<double> scores;
};

RankedResult rank_items(std::span<const double> score_row,
                        const std::vector<std::string>& item_ids,
                        std::string query_id = {});

/// Sum of precisions at the relevant positions within the top 10, divided
/// by min(|relevant|, 10).
double average_precision_at_10(const RankedResult& ranked,
                               const std::set<std::string>& relevant);

/// |top-k intersect relevant| / |relevant|.
double recall_at_k(const RankedResult& ranked,
                   const std::set<std::string>& relevant, std::size_t k);

enum class RetrievalDirection { text_to_audio, audio_to_text };

/// Metrics of a single evaluation run.
struct RunMetrics {
  double map10 = 0.0;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  std::vector<std::string> query_ids;
  std::vector<double> per_query_ap;
};

/// Aggregate over independent runs (e.g. five training seeds).
struct MetricReport {
  struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation; 0 for a single run
  };

  std::vector<RunMetrics> runs;

  std::size_t run_count() const noexcept { return runs.size(); }
  Summary map10() const;
  Summary r1() const;
  Summary r5() const;
  Summary r10() const;

  /// Per-query AP averaged across runs, in the query order of the first
  /// run. This is the statistic the paired t-test consumes.
  std::vector<double> mean_per_query_ap() const;
};

/// Scores all pairs with the model and aggregates per-query metrics.
/// text_to_audio ranks audio items per caption row; audio_to_text ranks
/// captions per audio column.
RunMetrics evaluate(const DualEncoder& model, const DenseMatrix& text_embeds,
                    const std::vector<std::string>& caption_ids,
                    const DenseMatrix& audio_embeds,
                    const std::vector<std::string>& audio_ids,
                    const Qrels& qrels, RetrievalDirection direction);

/// Same aggregation for a precomputed score matrix.
RunMetrics evaluate_scores(const DenseMatrix& scores,
                           const std::vector<std::string>& caption_ids,
                           const std::vector<std::string>& audio_ids,
                           const Qrels& qrels, RetrievalDirection direction);

struct TTestResult {
  double t = 0.0;
  std::size_t df = 0;
  double p = 1.0;  // two-sided
};

/// Paired t-test on d = a - b with sample standard deviation.
TTestResult paired_t_test(std::span<const double> a,
                          std::span<const double> b);

/// One-sided Student-t survival probability via the regularized incomplete
/// beta function, absolute error below 1e-10.
double student_t_sf(double t, std::size_t df);

}  // namespace audiorank
