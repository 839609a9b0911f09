#include "audiorank/objectives.hpp"

#include <cmath>
#include <vector>

#include <doctest.h>

#include "audiorank/linalg.hpp"
#include "test_util.hpp"

using namespace audiorank;
using testutil::expect_error;
using testutil::grad_close;

namespace {

/// Scalar re-evaluation of the listwise loss for one query list, kept
/// independent of the matrix code path: plain long double loops, no
/// max-subtraction reuse.
long double scalar_list_loss(const std::vector<long double>& targets,
                             const std::vector<long double>& scores,
                             long double omega, long double tau) {
  const std::size_t n = targets.size();
  std::vector<long double> p(n), q(n);
  long double pm = targets[0], qm = scores[0];
  for (std::size_t j = 1; j < n; ++j) {
    pm = std::max(pm, targets[j]);
    qm = std::max(qm, scores[j]);
  }
  long double ps = 0.0L, qs = 0.0L;
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = std::exp((targets[j] - pm) / omega);
    q[j] = std::exp((scores[j] - qm) / tau);
    ps += p[j];
    qs += q[j];
  }
  long double loss = 0.0L;
  for (std::size_t j = 0; j < n; ++j) {
    loss -= (p[j] / ps) * std::log(q[j] / qs);
  }
  return loss;
}

DenseMatrix random_scores(std::size_t n, Xoshiro256ss& rng) {
  return testutil::random_matrix(n, n, -1.0, 1.0, rng);
}

DenseMatrix random_relevance(std::size_t n, Xoshiro256ss& rng) {
  return testutil::random_matrix(n, n, 0.0, 1.0, rng);
}

void check_grad_against_fd(const DenseMatrix& targets, DenseMatrix scores,
                           const LossConfig& config, double rel_tol) {
  const LossResult analytic = evaluate_objective(targets, scores, config);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      const double saved = scores(i, j);
      const double eps = 1e-6;
      scores(i, j) = saved + eps;
      const double up = evaluate_objective(targets, scores, config).loss;
      scores(i, j) = saved - eps;
      const double down = evaluate_objective(targets, scores, config).loss;
      scores(i, j) = saved;
      const double fd = (up - down) / (2.0 * eps);
      CHECK_MESSAGE(grad_close(analytic.grad_scores(i, j), fd, rel_tol),
                    "entry (" << i << "," << j << "): analytic "
                              << analytic.grad_scores(i, j) << " vs fd " << fd);
    }
  }
}

}  // namespace

TEST_CASE("target_distribution examples") {
  const ProbabilityVector uniform =
      target_distribution(std::vector{0.4, 0.4, 0.4, 0.4}, 0.7);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(uniform[j] == doctest::Approx(0.25).epsilon(1e-12));
  }

  const ProbabilityVector hot = target_distribution(std::vector{1.0, 0.0, 0.0}, 0.05);
  CHECK(hot[0] == doctest::Approx(1.0 - 4.1223072e-9).epsilon(1e-12));
  CHECK(hot[1] == doctest::Approx(2.06115360969e-9).epsilon(1e-9));
  CHECK(hot[2] == doctest::Approx(2.06115360969e-9).epsilon(1e-9));

  // softmax of the default-logistic relevance gap 0.8029 at omega=0.05.
  const ProbabilityVector graded =
      target_distribution(std::vector{0.8641, 0.0612}, 0.05);
  CHECK(graded[0] == doctest::Approx(0.999999893806).epsilon(1e-12));
  CHECK(graded[1] == doctest::Approx(1.06193800431e-7).epsilon(1e-9));
}

TEST_CASE("predicted_distribution examples") {
  const ProbabilityVector uniform =
      predicted_distribution(std::vector{-0.2, -0.2, -0.2}, 0.05);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(uniform[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  const ProbabilityVector extreme = predicted_distribution(std::vector{1.0, -1.0}, 0.05);
  CHECK(extreme[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(extreme[1] == doctest::Approx(4.24835425529e-18).epsilon(1e-9));

  const ProbabilityVector mid =
      predicted_distribution(std::vector{0.5, 0.5, 0.0}, 0.05);
  CHECK(mid[0] == doctest::Approx(0.499988650275).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(0.499988650275).epsilon(1e-12));
  CHECK(mid[2] == doctest::Approx(2.26994496045e-5).epsilon(1e-9));
}

TEST_CASE("listnet_loss hand values") {
  std::vector<double> u4(4, 0.25);
  CHECK(listnet_loss(ProbabilityVector(u4), ProbabilityVector(u4)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  std::vector<double> u10(10, 0.1);
  CHECK(listnet_loss(ProbabilityVector::one_hot(10, 3), ProbabilityVector(u10)) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-12));

  CHECK(listnet_loss(ProbabilityVector(std::vector{0.5, 0.5}),
                     ProbabilityVector(std::vector{0.9, 0.1})) ==
        doctest::Approx(1.20397280433).epsilon(1e-11));

  expect_error(errc::length_mismatch, [] {
    listnet_loss(ProbabilityVector(std::vector{0.5, 0.5}),
                 ProbabilityVector(std::vector{1.0}));
  });
}

TEST_CASE("Gibbs inequality holds for random distributions") {
  auto rng = testutil::test_rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.bounded(16);
    const ProbabilityVector p =
        stable_softmax(testutil::random_vector(n, -2.0, 2.0, rng), 1.0);
    const ProbabilityVector q =
        stable_softmax(testutil::random_vector(n, -2.0, 2.0, rng), 1.0);
    CHECK(listnet_loss(p, q) >= listnet_loss(p, p) - 1e-12);
  }
}

TEST_CASE("listnet_direction_loss with all-equal rows is uniform") {
  LossConfig config;
  const std::size_t n = 5;
  DenseMatrix flat(n, n, std::vector<double>(n * n, 0.3));
  for (LossDirection dir :
       {LossDirection::audio, LossDirection::text, LossDirection::audio_plus_text}) {
    config.direction = dir;
    const LossResult r = listnet_direction_loss(flat, flat, config);
    const double scale = dir == LossDirection::audio_plus_text ? 2.0 : 1.0;
    CHECK(r.loss == doctest::Approx(scale * std::log(double(n))).epsilon(1e-12));
    for (double g : r.grad_scores.values()) CHECK(std::abs(g) <= 1e-15);
  }
}

TEST_CASE("listnet_direction_loss matches an independent scalar evaluation") {
  const DenseMatrix targets =
      DenseMatrix::from_rows({{0.8641, 0.0612}, {0.0612, 0.8641}});
  const DenseMatrix scores = DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  LossConfig config;  // omega = tau = 0.05

  long double expected_audio = 0.0L;
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<long double> t{targets(i, 0), targets(i, 1)};
    std::vector<long double> s{scores(i, 0), scores(i, 1)};
    expected_audio += scalar_list_loss(t, s, 0.05L, 0.05L);
  }
  expected_audio /= 2.0L;

  config.direction = LossDirection::audio;
  CHECK(listnet_direction_loss(targets, scores, config).loss ==
        doctest::Approx(static_cast<double>(expected_audio)).epsilon(1e-12));

  long double expected_text = 0.0L;
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<long double> t{targets(0, j), targets(1, j)};
    std::vector<long double> s{scores(0, j), scores(1, j)};
    expected_text += scalar_list_loss(t, s, 0.05L, 0.05L);
  }
  expected_text /= 2.0L;

  config.direction = LossDirection::text;
  CHECK(listnet_direction_loss(targets, scores, config).loss ==
        doctest::Approx(static_cast<double>(expected_text)).epsilon(1e-12));

  config.direction = LossDirection::audio_plus_text;
  CHECK(listnet_direction_loss(targets, scores, config).loss ==
        doctest::Approx(static_cast<double>(expected_audio + expected_text))
            .epsilon(1e-12));
}

TEST_CASE("listnet gradients match central finite differences") {
  auto rng = testutil::test_rng(32);
  for (double tau : {1.0, 0.05}) {
    LossConfig config;
    config.omega = tau;
    config.tau = tau;
    const DenseMatrix targets = random_relevance(8, rng);
    const DenseMatrix scores = random_scores(8, rng);
    for (LossDirection dir : {LossDirection::audio, LossDirection::text,
                              LossDirection::audio_plus_text}) {
      config.direction = dir;
      check_grad_against_fd(targets, scores, config, 1e-6);
    }
  }
}

TEST_CASE("listnet row/column gradients sum to zero") {
  auto rng = testutil::test_rng(33);
  const DenseMatrix targets = random_relevance(12, rng);
  const DenseMatrix scores = random_scores(12, rng);
  LossConfig config;

  config.direction = LossDirection::audio;
  const LossResult audio = listnet_direction_loss(targets, scores, config);
  for (std::size_t i = 0; i < 12; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < 12; ++j) row_sum += audio.grad_scores(i, j);
    CHECK(std::abs(row_sum) <= 1e-9);
  }

  config.direction = LossDirection::text;
  const LossResult text = listnet_direction_loss(targets, scores, config);
  for (std::size_t j = 0; j < 12; ++j) {
    double col_sum = 0.0;
    for (std::size_t i = 0; i < 12; ++i) col_sum += text.grad_scores(i, j);
    CHECK(std::abs(col_sum) <= 1e-9);
  }
}

TEST_CASE("listnet_direction_loss shape errors") {
  LossConfig config;
  expect_error(errc::shape_mismatch, [&] {
    listnet_direction_loss(DenseMatrix(2, 2), DenseMatrix(3, 3), config);
  });
  expect_error(errc::non_square_batch, [&] {
    listnet_direction_loss(DenseMatrix(2, 3), DenseMatrix(2, 3), config);
  });
  LossConfig bad;
  bad.omega = 0.0;
  expect_error(errc::non_positive_temperature, [&] {
    listnet_direction_loss(DenseMatrix(2, 2), DenseMatrix(2, 2), bad);
  });
}

TEST_CASE("infonce_loss closed forms") {
  const DenseMatrix eye2 = DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  // ln(1 + e^-20), computed at extended precision.
  CHECK(infonce_loss(eye2, 0.05).loss ==
        doctest::Approx(2.06115362031e-9).epsilon(1e-9));

  for (std::size_t n : {2, 5, 9}) {
    DenseMatrix flat(n, n, std::vector<double>(n * n, 0.7));
    CHECK(infonce_loss(flat, 0.3).loss ==
          doctest::Approx(std::log(double(n))).epsilon(1e-12));
  }

  expect_error(errc::shape_mismatch, [] { infonce_loss(DenseMatrix(2, 3), 0.05); });
  expect_error(errc::non_positive_temperature,
               [] { infonce_loss(DenseMatrix(2, 2), 0.0); });
}

TEST_CASE("infonce gradients match central finite differences") {
  auto rng = testutil::test_rng(34);
  LossConfig config;
  config.objective = ObjectiveKind::infonce;
  for (double tau : {1.0, 0.05}) {
    config.tau = tau;
    const DenseMatrix scores = random_scores(8, rng);
    check_grad_against_fd(DenseMatrix(), scores, config, 1e-6);
  }
}

TEST_CASE("one-hot ListNet in both directions reduces to InfoNCE") {
  auto rng = testutil::test_rng(35);
  CHECK(degenerate_equivalence_check(random_scores(4, rng), 0.05));
  CHECK(degenerate_equivalence_check(random_scores(16, rng), 1.0));

  // Identity-pattern scores: both directional terms equal
  // ln(1 + (N-1) e^(-1/tau)).
  const std::size_t n = 6;
  DenseMatrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  const double tau = 0.25;
  const double expected = std::log(1.0 + (n - 1) * std::exp(-1.0 / tau));
  CHECK(infonce_loss(eye, tau).loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(degenerate_equivalence_check(eye, tau));
}

TEST_CASE("scaling relevance changes P but keeps its argmax") {
  auto rng = testutil::test_rng(36);
  const auto row = testutil::random_vector(10, 0.0, 1.0, rng);
  std::vector<double> scaled = row;
  for (double& v : scaled) v *= 0.5;
  const ProbabilityVector p = target_distribution(row, 0.05);
  const ProbabilityVector q = target_distribution(scaled, 0.05);
  std::size_t pa = 0, qa = 0, ra = 0;
  double pdiff = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    pdiff = std::max(pdiff, std::abs(p[j] - q[j]));
    if (p[j] > p[pa]) pa = j;
    if (q[j] > q[qa]) qa = j;
    if (row[j] > row[ra]) ra = j;
  }
  CHECK(pdiff > 1e-6);  // Eq-2-style softmax is not scale invariant
  CHECK(pa == ra);
  CHECK(qa == ra);
}

TEST_CASE("evaluate_objective routes by objective kind") {
  auto rng = testutil::test_rng(37);
  const DenseMatrix scores = random_scores(4, rng);
  const DenseMatrix targets = random_relevance(4, rng);
  LossConfig config;
  config.objective = ObjectiveKind::infonce;
  CHECK(evaluate_objective(targets, scores, config).loss ==
        doctest::Approx(infonce_loss(scores, config.tau).loss));
  config.objective = ObjectiveKind::listnet;
  CHECK(evaluate_objective(targets, scores, config).loss ==
        doctest::Approx(listnet_direction_loss(targets, scores, config).loss));
}
