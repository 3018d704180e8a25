#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "wdcgan/error.hpp"
#include "wdcgan/metrics.hpp"

using namespace wdcgan;
using namespace wdcgan::metrics;

namespace {

PredictionSet make_set(const std::vector<double>& scores, const std::vector<int>& labels) {
  PredictionSet p;
  for (std::size_t i = 0; i < scores.size(); ++i) p.entries.push_back({scores[i], labels[i]});
  return p;
}

// Sweeps every distinct score as a decision threshold, largest first, and
// counts detections with a fresh pass over the set at each one.
double threshold_sweep_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  std::size_t positives = 0;
  for (int l : labels) positives += l == 1;
  double ap = 0.0, previous_recall = 0.0;
  for (double t : thresholds) {
    std::size_t detected = 0, tp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++detected;
        tp += labels[i] == 1;
      }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(detected);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    ap += (recall - previous_recall) * precision;
    previous_recall = recall;
  }
  return ap;
}

std::vector<double> distinct_scores(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s;
  while (s.size() < n) {
    const double v = u(rng);
    if (std::find(s.begin(), s.end(), v) == s.end()) s.push_back(v);
  }
  return s;
}

}  // namespace

TEST_CASE("MAE examples") {
  CHECK(mae(make_set({0.2, 0.8}, {0, 1})) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(mae(make_set({0.77}, {1})) == doctest::Approx(0.23).epsilon(1e-14));
  CHECK(mae(make_set({0.0, 1.0}, {0, 1})) == 0.0);
}

TEST_CASE("classification accuracy thresholds inclusively") {
  CHECK(classification_accuracy(make_set({0.5}, {1})) == 1.0);
  CHECK(classification_accuracy(make_set({0.6, 0.4}, {0, 1})) == 0.0);
  CHECK(classification_accuracy(make_set({0.6, 0.4, 0.9, 0.1}, {1, 0, 0, 0})) == 0.75);

  auto p = make_set({0.55, 0.65}, {0, 1});
  p.threshold = 0.6;
  CHECK(classification_accuracy(p) == 1.0);
}

TEST_CASE("average precision worked example") {
  const auto p = make_set({0.9, 0.8, 0.3}, {1, 0, 1});
  CHECK(average_precision(p) == doctest::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)).epsilon(1e-15));
  CHECK(average_precision(p) == doctest::Approx(0.8333333333).epsilon(1e-9));
  CHECK(average_precision(make_set({0.9, 0.1}, {1, 0})) == 1.0);
}

TEST_CASE("average precision without positives is undefined") {
  try {
    average_precision(make_set({0.9, 0.1, 0.4}, {0, 0, 0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::undefined_metric);
  }
}

TEST_CASE("average precision matches an exhaustive threshold sweep") {
  std::mt19937_64 rng(2024);
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto scores = distinct_scores(n, rng);
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1u;
        const double got = average_precision(make_set(scores, labels));
        const double want = threshold_sweep_ap(scores, labels);
        CHECK(got == want);
        CHECK(got > 0.0);
        CHECK(got <= 1.0);
        ++checked;
      }
    }
  }
  CHECK(checked == 3u * ((1u << 9) - 2u - 8u));
}

TEST_CASE("average precision is invariant to monotone rescoring and entry order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto scores = distinct_scores(12, rng);
    std::vector<int> labels(12);
    std::bernoulli_distribution coin(0.5);
    for (int& l : labels) l = coin(rng);
    labels[trial % 12] = 1;
    const double ap = average_precision(make_set(scores, labels));

    std::vector<double> squashed;
    for (double s : scores) squashed.push_back(s * s * s);
    CHECK(average_precision(make_set(squashed, labels)) == doctest::Approx(ap).epsilon(1e-14));

    std::vector<std::size_t> perm(12);
    for (std::size_t i = 0; i < 12; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> ps;
    std::vector<int> pl;
    for (std::size_t i : perm) {
      ps.push_back(scores[i]);
      pl.push_back(labels[i]);
    }
    CHECK(average_precision(make_set(ps, pl)) == doctest::Approx(ap).epsilon(1e-14));
  }
}

TEST_CASE("perfect ranking gives AP 1 regardless of calibration") {
  const auto p = make_set({0.51, 0.52, 0.49, 0.1}, {1, 1, 0, 0});
  CHECK(average_precision(p) == 1.0);
}

TEST_CASE("CA and MAE match direct formulas") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 40;
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      l[i] = coin(rng);
    }
    double abs_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      abs_sum += l[i] ? 1.0 - s[i] : s[i];
      hits += (s[i] >= 0.5) == (l[i] == 1);
    }
    const auto p = make_set(s, l);
    CHECK(std::abs(mae(p) - abs_sum / static_cast<double>(n)) <= 1e-12);
    CHECK(std::abs(classification_accuracy(p) - static_cast<double>(hits) / static_cast<double>(n)) <= 1e-12);
    CHECK(mae(p) >= 0.0);
    CHECK(mae(p) <= 1.0);
  }
}

TEST_CASE("prediction sets are validated") {
  CHECK_THROWS_AS(mae(PredictionSet{}), Error);
  CHECK_THROWS_AS(mae(make_set({1.5}, {1})), Error);
  CHECK_THROWS_AS(classification_accuracy(make_set({0.5}, {2})), Error);
  CHECK_THROWS_AS(average_precision(make_set({std::nan("")}, {1})), Error);
}
