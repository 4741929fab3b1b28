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

#include "inferlab/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace inferlab::metrics {

namespace {

void check_binary_inputs(const std::vector<double>& scores,
                         const std::vector<int>& ground_truth) {
  if (scores.size() != ground_truth.size())
    throw Error(ErrorCode::InvalidSpec, "scores and labels differ in length");
  if (scores.empty())
    throw Error(ErrorCode::InvalidSpec, "empty score vector");
  bool has_pos = false, has_neg = false;
  for (int y : ground_truth) {
    if (y != 0 && y != 1)
      throw Error(ErrorCode::InvalidSpec, "binary labels must be 0 or 1");
    (y == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw Error(ErrorCode::DegenerateLabels,
                "ground truth holds a single class");
}

}  // namespace

double auc_score(const std::vector<double>& scores,
                 const std::vector<int>& ground_truth) {
  check_binary_inputs(scores, ground_truth);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based average rank over the tie group [i, j).
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (ground_truth[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  double numer =
      rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                         static_cast<double>(n_pos + 1);
  return numer / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double tpr_at_fpr(const std::vector<double>& scores,
                  const std::vector<int>& ground_truth, double fpr_target) {
  check_binary_inputs(scores, ground_truth);

  std::vector<double> distinct(scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());

  std::vector<double> thresholds;
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    thresholds.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  thresholds.push_back(std::numeric_limits<double>::infinity());

  std::size_t n_pos = 0, n_neg = 0;
  for (int y : ground_truth) (y == 1 ? n_pos : n_neg) += 1;

  double best = 0.0;
  bool found = false;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (scores[k] > t) {
        if (ground_truth[k] == 1) ++tp;
        else ++fp;
      }
    }
    double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    if (fpr <= fpr_target) {
      double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
      if (!found || tpr > best) best = tpr;
      found = true;
    }
  }
  return found ? best : 0.0;
}

MetricReport compute_metrics(const std::vector<double>& scores,
                             const std::vector<int>& predictions,
                             const std::vector<int>& ground_truth,
                             const std::vector<double>& fpr_targets) {
  check_binary_inputs(scores, ground_truth);
  if (predictions.size() != ground_truth.size())
    throw Error(ErrorCode::InvalidSpec,
                "predictions and labels differ in length");

  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == ground_truth[i]) ++correct;
    if (predictions[i] == 1 && ground_truth[i] == 1) ++tp;
    if (predictions[i] == 1 && ground_truth[i] == 0) ++fp;
    if (predictions[i] == 0 && ground_truth[i] == 1) ++fn;
  }

  MetricReport report;
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(predictions.size());
  double denom = static_cast<double>(2 * tp + fp + fn);
  report.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  report.auc = auc_score(scores, ground_truth);
  for (double target : fpr_targets)
    report.tpr_at_fpr.emplace_back(target,
                                   tpr_at_fpr(scores, ground_truth, target));
  return report;
}

MetricReport compute_multiclass_metrics(const std::vector<int>& predictions,
                                        const std::vector<int>& ground_truth) {
  if (predictions.size() != ground_truth.size())
    throw Error(ErrorCode::InvalidSpec,
                "predictions and labels differ in length");
  if (predictions.empty())
    throw Error(ErrorCode::InvalidSpec, "empty prediction vector");

  std::map<int, std::array<std::size_t, 3>> per_class;  // tp, fp, fn
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int p = predictions[i], y = ground_truth[i];
    if (p == y) {
      ++correct;
      per_class[y][0] += 1;
    } else {
      per_class[p][1] += 1;
      per_class[y][2] += 1;
    }
  }

  double f1_sum = 0.0;
  std::size_t classes_in_truth = 0;
  for (const auto& [cls, counts] : per_class) {
    auto [tp, fp, fn] = counts;
    if (tp + fn == 0) continue;  // class never occurs in ground truth
    ++classes_in_truth;
    double denom = static_cast<double>(2 * tp + fp + fn);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }

  MetricReport report;
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(predictions.size());
  report.f1 = classes_in_truth > 0
                  ? f1_sum / static_cast<double>(classes_in_truth)
                  : 0.0;
  return report;
}

KsResult ks_shift(const std::vector<double>& sample_a,
                  const std::vector<double>& sample_b, double alpha) {
  if (sample_a.empty() || sample_b.empty())
    throw Error(ErrorCode::InvalidSpec, "empty sample in ks_shift");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidSpec, "alpha must lie in (0, 1)");

  std::vector<double> a(sample_a), b(sample_b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
    double diff = std::abs(static_cast<double>(ia) / na -
                           static_cast<double>(ib) / nb);
    d = std::max(d, diff);
  }

  KsResult result;
  result.statistic = d;
  double c_alpha = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  result.critical_value = c_alpha * std::sqrt((na + nb) / (na * nb));
  result.reject = d > result.critical_value;
  return result;
}

void fill_binary_metrics(AttackResult& result,
                         const std::vector<double>& fpr_targets) {
  MetricReport report = compute_metrics(result.scores, result.predictions,
                                        result.ground_truth, fpr_targets);
  result.metrics["accuracy"] = report.accuracy;
  result.metrics["f1"] = report.f1;
  result.metrics["auc"] = report.auc;
  for (const auto& [target, tpr] : report.tpr_at_fpr) {
    char key[64];
    std::snprintf(key, sizeof(key), "tpr_at_fpr_%g", target);
    result.metrics[key] = tpr;
  }
}

void fill_multiclass_metrics(AttackResult& result) {
  MetricReport report =
      compute_multiclass_metrics(result.predictions, result.ground_truth);
  result.metrics["accuracy"] = report.accuracy;
  result.metrics["f1"] = report.f1;
}

}  // namespace inferlab::metrics
