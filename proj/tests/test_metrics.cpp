/*
 * Copyright 2026 The Inferlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "inferlab/metrics.hpp"

using namespace inferlab;
using namespace inferlab::metrics;

namespace {

// Independent pair-counting reference for AUC.
double brute_force_auc(const std::vector<double>& scores,
                       const std::vector<int>& truth) {
  double wins = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] != 1) continue;
    ++n_pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j] == 1) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  for (int y : truth)
    if (y == 0) ++n_neg;
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Independent threshold-scan reference for TPR at an FPR bound.
double brute_force_tpr(const std::vector<double>& scores,
                       const std::vector<int>& truth, double fpr_target) {
  std::vector<double> uniq(scores);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> thresholds{-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
    thresholds.push_back((uniq[i] + uniq[i + 1]) / 2.0);

  double n_pos = 0, n_neg = 0;
  for (int y : truth) (y == 1 ? n_pos : n_neg) += 1;
  double best = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] > t) (truth[i] == 1 ? tp : fp) += 1;
    }
    if (fp / n_neg <= fpr_target) best = std::max(best, tp / n_pos);
  }
  return best;
}

}  // namespace

TEST_CASE("auc separable and tied cases") {
  // Perfectly separated scores.
  CHECK(auc_score({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  // Reversed separation.
  CHECK(auc_score({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  // All scores identical: every pair ties, AUC 0.5.
  CHECK(auc_score({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
  // Hand example: scores (0.1, 0.4, 0.35, 0.8) labels (0, 0, 1, 1).
  // Pairs: (0.35>0.1)=1, (0.35<0.4)=0, (0.8>0.1)=1, (0.8>0.4)=1 -> 3/4.
  CHECK(auc_score({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
}

TEST_CASE("auc matches pair-counting oracle on random vectors") {
  Rng rng(20260501);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores(200);
    std::vector<int> truth(200);
    bool tie_heavy = rep % 3 == 0;
    for (int i = 0; i < 200; ++i) {
      scores[i] = tie_heavy ? std::round(rng.uniform() * 8.0) / 8.0
                            : rng.uniform();
      truth[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    truth[0] = 1;
    truth[1] = 0;
    CHECK(auc_score(scores, truth) == doctest::Approx(
              brute_force_auc(scores, truth)).epsilon(1e-12));
  }
}

TEST_CASE("tpr at low fpr matches threshold-scan oracle") {
  Rng rng(77001);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores(200);
    std::vector<int> truth(200);
    for (int i = 0; i < 200; ++i) {
      scores[i] = rep % 4 == 0 ? std::round(rng.uniform() * 10.0) / 10.0
                               : rng.normal();
      truth[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    truth[0] = 1;
    truth[1] = 0;
    for (double target : {0.001, 0.01, 0.1}) {
      CHECK(tpr_at_fpr(scores, truth, target) ==
            brute_force_tpr(scores, truth, target));
    }
  }
}

TEST_CASE("tpr at strict fpr picks only clean thresholds") {
  // One negative outranks every positive: at FPR target 0 the scan must use
  // the +inf sentinel and report 0.
  std::vector<double> scores{0.9, 0.1, 0.2, 0.3};
  std::vector<int> truth{0, 1, 1, 1};
  CHECK(tpr_at_fpr(scores, truth, 0.0) == 0.0);
  // Loosening to FPR <= 1 admits everything.
  CHECK(tpr_at_fpr(scores, truth, 1.0) == 1.0);
}

TEST_CASE("binary report accuracy and f1") {
  // predictions (1,1,0,0) vs truth (1,0,1,0): tp=1 fp=1 fn=1 -> f1=0.5.
  auto report = compute_metrics({0.9, 0.8, 0.4, 0.1}, {1, 1, 0, 0},
                                {1, 0, 1, 0});
  CHECK(report.accuracy == 0.5);
  CHECK(report.f1 == 0.5);
  REQUIRE(report.tpr_at_fpr.size() == 1);
  CHECK(report.tpr_at_fpr[0].first == 0.001);
}

TEST_CASE("degenerate ground truth is rejected") {
  CHECK_THROWS_AS(compute_metrics({0.1, 0.2}, {0, 0}, {0, 0}), Error);
  try {
    compute_metrics({0.1, 0.2}, {0, 0}, {1, 1});
    FAIL("expected DegenerateLabels");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateLabels);
  }
}

TEST_CASE("multiclass macro f1") {
  // truth (0,0,1,2), pred (0,1,1,2): class0 f1=2/3, class1 f1=2/3, class2 1.
  auto report = compute_multiclass_metrics({0, 1, 1, 2}, {0, 0, 1, 2});
  CHECK(report.accuracy == 0.75);
  CHECK(report.f1 == doctest::Approx((2.0 / 3 + 2.0 / 3 + 1.0) / 3.0));
  // Degenerate always-one-class predictor on a binary problem: the
  // never-predicted class contributes f1 0.
  auto collapsed = compute_multiclass_metrics({1, 1, 1, 1}, {1, 1, 0, 0});
  CHECK(collapsed.accuracy == 0.5);
  CHECK(collapsed.f1 == doctest::Approx(0.5 * (2.0 * 2 / (2 * 2 + 2))));
}

TEST_CASE("ks test identical, shifted, and disjoint samples") {
  std::vector<double> base, shifted, far;
  Rng rng(99);
  for (int i = 0; i < 400; ++i) {
    double x = rng.normal();
    base.push_back(x);
    shifted.push_back(x + 0.05);
    far.push_back(x + 50.0);
  }
  auto same = ks_shift(base, base);
  CHECK(same.statistic == 0.0);
  CHECK_FALSE(same.reject);

  auto tiny = ks_shift(base, shifted);
  CHECK_FALSE(tiny.reject);

  auto apart = ks_shift(base, far);
  CHECK(apart.statistic == 1.0);
  CHECK(apart.reject);
}

TEST_CASE("ks critical value matches the asymptotic formula") {
  std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> b{1.5, 2.5, 3.5, 4.5, 5.5};
  auto r = ks_shift(a, b, 0.05);
  double expected = std::sqrt(-std::log(0.025) / 2.0) *
                    std::sqrt((10.0 + 5.0) / (10.0 * 5.0));
  CHECK(r.critical_value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("largest remainder apportionment") {
  // 7 slots at (0.5, 0.5): floor gives 3+3, remainder goes to index 0.
  auto counts = largest_remainder_counts({0.5, 0.5}, 7);
  CHECK(counts[0] == 4);
  CHECK(counts[1] == 3);
  // 10 slots at (0.2, 0.8) splits exactly.
  counts = largest_remainder_counts({0.2, 0.8}, 10);
  CHECK(counts[0] == 2);
  CHECK(counts[1] == 8);
  // 3 slots across (0.3, 0.3, 0.4): floors 0+0+1, remainders 0.9 0.9 0.2,
  // ties resolved to lower index.
  counts = largest_remainder_counts({0.3, 0.3, 0.4}, 3);
  CHECK(counts[0] == 1);
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 1);
  CHECK_THROWS_AS(largest_remainder_counts({0.5, 0.6}, 4), Error);
}

TEST_CASE("seed derivation is stable and name-sensitive") {
  auto a = derive_seed(1234, "train", 0);
  auto b = derive_seed(1234, "train", 0);
  auto c = derive_seed(1234, "attack", 0);
  auto d = derive_seed(1234, "train", 1);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
}
