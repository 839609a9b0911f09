#include "audiorank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

using namespace audiorank;
using testutil::expect_error;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "y" + std::to_string(i);
  return ids;
}

/// Brute-force oracle: selection of the max remaining score (smallest index
/// wins ties) and direct enumeration of the metric definitions.
struct OracleMetrics {
  double ap10, r1, r5, r10;
};

OracleMetrics oracle_metrics(const std::vector<double>& scores,
                             const std::vector<std::string>& ids,
                             const std::set<std::string>& relevant) {
  std::vector<std::size_t> ranked;
  std::vector<bool> used(scores.size(), false);
  for (std::size_t r = 0; r < scores.size(); ++r) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (used[i]) continue;
      if (best == scores.size() || scores[i] > scores[best]) best = i;
    }
    used[best] = true;
    ranked.push_back(best);
  }
  OracleMetrics out{0.0, 0.0, 0.0, 0.0};
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min<std::size_t>(10, ranked.size()); ++r) {
    if (relevant.count(ids[ranked[r]]) > 0) {
      ++hits;
      out.ap10 += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  out.ap10 /= static_cast<double>(std::min<std::size_t>(relevant.size(), 10));
  auto recall = [&](std::size_t k) {
    std::size_t found = 0;
    for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
      if (relevant.count(ids[ranked[r]]) > 0) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(relevant.size());
  };
  out.r1 = recall(1);
  out.r5 = recall(5);
  out.r10 = recall(10);
  return out;
}

}  // namespace

TEST_CASE("rank_items sorts descending with stable tie-break") {
  const auto ids = make_ids(3);
  const RankedResult ranked = rank_items(std::vector{0.1, 0.9, 0.5}, ids, "q");
  CHECK(ranked.item_ids == std::vector<std::string>{"y1", "y2", "y0"});
  CHECK(ranked.scores == std::vector<double>{0.9, 0.5, 0.1});

  const RankedResult ties = rank_items(std::vector{0.5, 0.5, 0.5}, ids);
  CHECK(ties.item_ids == std::vector<std::string>{"y0", "y1", "y2"});

  expect_error(errc::length_mismatch,
               [&] { rank_items(std::vector{1.0}, ids); });
}

TEST_CASE("rank_items output is a non-increasing permutation") {
  auto rng = testutil::test_rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.bounded(40);
    const auto scores = testutil::random_vector(n, -1.0, 1.0, rng);
    const RankedResult ranked = rank_items(scores, make_ids(n));
    std::set<std::string> unique(ranked.item_ids.begin(), ranked.item_ids.end());
    CHECK(unique.size() == n);
    for (std::size_t r = 1; r < n; ++r) {
      CHECK(ranked.scores[r - 1] >= ranked.scores[r]);
    }
  }
}

TEST_CASE("average_precision_at_10 worked examples") {
  const auto ids = make_ids(12);
  std::vector<double> scores(12);
  for (std::size_t i = 0; i < 12; ++i) scores[i] = 1.0 - 0.05 * double(i);
  const RankedResult ranked = rank_items(scores, ids);  // identity order

  CHECK(average_precision_at_10(ranked, {"y0"}) == 1.0);
  CHECK(average_precision_at_10(ranked, {"y10"}) == 0.0);  // rank 11
  // relevant at ranks 1 and 4: (1/1 + 2/4) / 2
  CHECK(average_precision_at_10(ranked, {"y0", "y3"}) == doctest::Approx(0.75));
  expect_error(errc::empty_relevant_set,
               [&] { average_precision_at_10(ranked, {}); });
}

TEST_CASE("recall_at_k worked examples") {
  const auto ids = make_ids(12);
  std::vector<double> scores(12);
  for (std::size_t i = 0; i < 12; ++i) scores[i] = 1.0 - 0.05 * double(i);
  const RankedResult ranked = rank_items(scores, ids);

  CHECK(recall_at_k(ranked, {"y2"}, 1) == 0.0);
  CHECK(recall_at_k(ranked, {"y2"}, 5) == 1.0);
  // 5 relevant, 2 inside the top 10.
  const std::set<std::string> five{"y0", "y9", "y10", "y11", "y20"};
  CHECK(recall_at_k(ranked, {"y0", "y9", "y10", "y11"}, 10) == doctest::Approx(0.5));
  CHECK(recall_at_k(ranked, five, 10) == doctest::Approx(0.4));
  CHECK(recall_at_k(ranked, {"y0", "y1", "y2"}, 3) == 1.0);
  expect_error(errc::empty_relevant_set, [&] { recall_at_k(ranked, {}, 5); });
}

TEST_CASE("single-relevant AP equals reciprocal rank inside the cutoff") {
  auto rng = testutil::test_rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.bounded(19);
    const auto scores = testutil::random_vector(n, -1.0, 1.0, rng);
    const auto ids = make_ids(n);
    const RankedResult ranked = rank_items(scores, ids);
    const std::string target = ids[rng.bounded(n)];
    std::size_t rank = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (ranked.item_ids[r] == target) rank = r + 1;
    }
    const double expected = rank <= 10 ? 1.0 / static_cast<double>(rank) : 0.0;
    CHECK(average_precision_at_10(ranked, {target}) == doctest::Approx(expected));
  }
}

TEST_CASE("recall is monotone in k") {
  auto rng = testutil::test_rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.bounded(19);
    const auto scores = testutil::random_vector(n, -1.0, 1.0, rng);
    const auto ids = make_ids(n);
    const RankedResult ranked = rank_items(scores, ids);
    std::set<std::string> relevant;
    const std::size_t n_rel = 1 + rng.bounded(std::min<std::size_t>(6, n));
    while (relevant.size() < n_rel) relevant.insert(ids[rng.bounded(n)]);
    const double r1 = recall_at_k(ranked, relevant, 1);
    const double r5 = recall_at_k(ranked, relevant, 5);
    const double r10 = recall_at_k(ranked, relevant, 10);
    CHECK(r1 <= r5);
    CHECK(r5 <= r10);
  }
}

TEST_CASE("metrics match the brute-force oracle exactly") {
  auto rng = testutil::test_rng(54);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.bounded(19);
    const auto scores = testutil::random_vector(n, -1.0, 1.0, rng);
    const auto ids = make_ids(n);
    std::set<std::string> relevant;
    const std::size_t n_rel = 1 + rng.bounded(std::min<std::size_t>(6, n));
    while (relevant.size() < n_rel) relevant.insert(ids[rng.bounded(n)]);

    const RankedResult ranked = rank_items(scores, ids);
    const OracleMetrics expected = oracle_metrics(scores, ids, relevant);
    CHECK(average_precision_at_10(ranked, relevant) == expected.ap10);
    CHECK(recall_at_k(ranked, relevant, 1) == expected.r1);
    CHECK(recall_at_k(ranked, relevant, 5) == expected.r5);
    CHECK(recall_at_k(ranked, relevant, 10) == expected.r10);
  }
}

TEST_CASE("evaluate_scores on perfect and adversarial score matrices") {
  const std::size_t n_caps = 3, n_audio = 12;
  std::vector<std::string> caption_ids;
  Qrels qrels;
  const auto audio_ids = make_ids(n_audio);
  DenseMatrix perfect(n_caps, n_audio);
  DenseMatrix adversarial(n_caps, n_audio);
  for (std::size_t i = 0; i < n_caps; ++i) {
    caption_ids.push_back("x" + std::to_string(i));
    qrels.relevant[caption_ids.back()] = {audio_ids[i]};
    for (std::size_t j = 0; j < n_audio; ++j) {
      perfect(i, j) = (i == j) ? 1.0 : -0.5;
      adversarial(i, j) = (i == j) ? -1.0 : 0.5;
    }
  }
  const RunMetrics good = evaluate_scores(perfect, caption_ids, audio_ids, qrels,
                                          RetrievalDirection::text_to_audio);
  CHECK(good.map10 == 1.0);
  CHECK(good.r1 == 1.0);
  CHECK(good.r10 == 1.0);
  CHECK(good.per_query_ap.size() == n_caps);

  const RunMetrics bad = evaluate_scores(adversarial, caption_ids, audio_ids,
                                         qrels, RetrievalDirection::text_to_audio);
  CHECK(bad.map10 == 0.0);
  CHECK(bad.r1 == 0.0);
  CHECK(bad.r10 == 0.0);
}

TEST_CASE("evaluate transposes for audio-to-text queries") {
  // Two audios with two captions each; scores favor the right captions.
  const std::vector<std::string> caption_ids{"a#0", "a#1", "b#0", "b#1"};
  const std::vector<std::string> audio_ids{"a", "b"};
  DenseMatrix scores(4, 2);
  scores(0, 0) = 0.9;
  scores(1, 0) = 0.8;
  scores(2, 0) = -0.5;
  scores(3, 0) = -0.6;
  scores(0, 1) = -0.4;
  scores(1, 1) = -0.3;
  scores(2, 1) = 0.7;
  scores(3, 1) = 0.6;
  Qrels qrels;
  qrels.relevant["a"] = {"a#0", "a#1"};
  qrels.relevant["b"] = {"b#0", "b#1"};
  const RunMetrics metrics = evaluate_scores(scores, caption_ids, audio_ids,
                                             qrels, RetrievalDirection::audio_to_text);
  CHECK(metrics.map10 == 1.0);
  CHECK(metrics.r1 == 0.5);  // one of the two relevant captions at rank 1
  CHECK(metrics.r5 == 1.0);
  CHECK(metrics.query_ids == audio_ids);
}

TEST_CASE("evaluate_scores validates qrels and shapes") {
  Qrels qrels;  // empty
  expect_error(errc::empty_relevant_set, [&] {
    evaluate_scores(DenseMatrix(1, 2), {"x"}, {"y0", "y1"}, qrels,
                    RetrievalDirection::text_to_audio);
  });
  expect_error(errc::shape_mismatch, [&] {
    evaluate_scores(DenseMatrix(1, 2), {"x"}, {"y0"}, qrels,
                    RetrievalDirection::text_to_audio);
  });
}

TEST_CASE("MetricReport aggregates mean and sample sd across runs") {
  MetricReport report;
  RunMetrics a, b;
  a.map10 = 0.5;
  a.per_query_ap = {0.4, 0.6};
  b.map10 = 0.7;
  b.per_query_ap = {0.6, 0.8};
  report.runs = {a, b};
  CHECK(report.map10().mean == doctest::Approx(0.6));
  CHECK(report.map10().sd ==
        doctest::Approx(std::sqrt(((0.1 * 0.1) + (0.1 * 0.1)) / 1.0)));
  const auto mean_ap = report.mean_per_query_ap();
  CHECK(mean_ap == std::vector<double>{0.5, 0.7});
}

TEST_CASE("paired_t_test on the d=[1,2,3] fixture") {
  const std::vector<double> a{2.0, 3.0, 4.0};
  const std::vector<double> b{1.0, 1.0, 1.0};
  const TTestResult r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(3.46410161514).epsilon(1e-9));
  CHECK(r.df == 2);
  // Closed form for df=2: p = 1 - t/sqrt(t^2+2).
  CHECK(r.p == doctest::Approx(0.07417990022).epsilon(1e-6));

  const TTestResult swapped = paired_t_test(b, a);
  CHECK(swapped.t == doctest::Approx(-r.t).epsilon(1e-12));
  CHECK(swapped.p == doctest::Approx(r.p).epsilon(1e-12));
}

TEST_CASE("paired_t_test degenerate inputs") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  expect_error(errc::zero_variance, [&] { paired_t_test(a, a); });
  expect_error(errc::length_mismatch,
               [&] { paired_t_test(a, std::vector{1.0}); });
  expect_error(errc::length_mismatch,
               [&] { paired_t_test(std::vector{1.0}, std::vector{2.0}); });
  // Constant non-zero difference is still zero variance.
  expect_error(errc::zero_variance, [&] {
    paired_t_test(std::vector{2.0, 3.0}, std::vector{1.0, 2.0});
  });
}

TEST_CASE("student_t_sf pinned values") {
  CHECK(student_t_sf(0.0, 7) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(student_t_sf(3.46410161514, 2) ==
        doctest::Approx(0.03708995011).epsilon(1e-8));
  // df=1 closed form: 1/2 - atan(t)/pi.
  CHECK(student_t_sf(1.0, 1) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(student_t_sf(2.0, 10) == doctest::Approx(0.0366940173854).epsilon(1e-9));
  CHECK(student_t_sf(2.5, 3) == doctest::Approx(0.043853323504).epsilon(1e-9));
  CHECK(student_t_sf(1e9, 3) <= 1e-10);
  CHECK(student_t_sf(-1.0, 1) == doctest::Approx(0.75).epsilon(1e-10));
  expect_error(errc::invalid_df, [] { student_t_sf(1.0, 0); });
}

TEST_CASE("student_t_sf is strictly decreasing in t") {
  for (std::size_t df : {1u, 2u, 5u, 30u}) {
    double prev = 1.0;
    for (double t = -6.0; t <= 6.0; t += 0.25) {
      const double sf = student_t_sf(t, df);
      CHECK(sf < prev);
      CHECK(sf >= 0.0);
      CHECK(sf <= 1.0);
      prev = sf;
    }
  }
}

TEST_CASE("student_t_sf approaches the normal survival function") {
  for (double t : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    const double normal_sf = 0.5 * std::erfc(t / std::sqrt(2.0));
    CHECK(std::abs(student_t_sf(t, 1000000) - normal_sf) < 1e-6);
  }
}
