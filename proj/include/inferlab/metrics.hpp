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

#ifndef INFERLAB_METRICS_HPP
#define INFERLAB_METRICS_HPP

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "inferlab/common.hpp"

namespace inferlab::metrics {

struct MetricReport {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  // (target FPR, best TPR with empirical FPR <= target)
  std::vector<std::pair<double, double>> tpr_at_fpr;
};

// Binary attack metrics. Positive class is label 1 (e.g. "member").
// Higher score means more positive. AUC is the rank statistic with tied
// scores contributing half weight. TPR at an FPR target scans thresholds at
// midpoints between distinct sorted scores plus +/-infinity sentinels and
// keeps the best TPR whose empirical FPR does not exceed the target.
// Throws DegenerateLabels when ground truth holds a single class.
MetricReport compute_metrics(const std::vector<double>& scores,
                             const std::vector<int>& predictions,
                             const std::vector<int>& ground_truth,
                             const std::vector<double>& fpr_targets = {0.001});

// Accuracy plus macro-averaged F1 over the classes present in ground truth.
MetricReport compute_multiclass_metrics(const std::vector<int>& predictions,
                                        const std::vector<int>& ground_truth);

double auc_score(const std::vector<double>& scores,
                 const std::vector<int>& ground_truth);

double tpr_at_fpr(const std::vector<double>& scores,
                  const std::vector<int>& ground_truth, double fpr_target);

// Shared result shape for every attack. Scores are oriented so that higher
// favors the positive outcome (e.g. "member"); predictions and ground truth
// are categorical labels of equal length.
struct AttackResult {
  std::vector<double> scores;
  std::vector<int> predictions;
  std::vector<int> ground_truth;
  std::map<std::string, double> metrics;
};

// Populates accuracy/f1/auc plus one tpr_at_fpr_<t> entry per target from the
// result's scores, predictions, and binary ground truth.
void fill_binary_metrics(AttackResult& result,
                         const std::vector<double>& fpr_targets = {0.001, 0.01,
                                                                   0.1});

// Populates accuracy and macro F1 for categorical attacks.
void fill_multiclass_metrics(AttackResult& result);

struct KsResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic critical value
// c(alpha) * sqrt((n + m) / (n * m)), c(alpha) = sqrt(-ln(alpha / 2) / 2).
KsResult ks_shift(const std::vector<double>& sample_a,
                  const std::vector<double>& sample_b, double alpha = 0.05);

}  // namespace inferlab::metrics

#endif  // INFERLAB_METRICS_HPP
