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

#include "inferlab/propinf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace inferlab::propinf {

using nn::Mat;
using nn::Vec;

std::vector<std::size_t> query_visit_order(const QueryAux& query_aux) {
  std::vector<std::size_t> order(query_aux.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return query_aux[a].first.weights <
                            query_aux[b].first.weights;
                   });
  return order;
}

Vec PropinfModel::posteriors(const Vec& features) const {
  return nn::softmax(weights * features + bias);
}

int PropinfModel::predict(const Vec& features) const {
  return nn::argmax_lowest(posteriors(features));
}

Vec posterior_features(const model::TrainedModel& m,
                       const QueryAux& query_aux) {
  if (query_aux.empty())
    throw Error(ErrorCode::InvalidAttackConfig,
                "property attack needs a non-empty query auxiliary set");
  const int k = m.meta.num_classes;
  Eigen::Index total = 0;
  for (const auto& [prop, set] : query_aux) {
    if (set.empty())
      throw Error(ErrorCode::InvalidAttackConfig,
                  "property attack query set is empty");
    total += static_cast<Eigen::Index>(set.size()) * k;
  }
  Vec features(total);
  Eigen::Index at = 0;
  for (std::size_t idx : query_visit_order(query_aux)) {
    for (const auto& s : query_aux[idx].second) {
      features.segment(at, k) = m.posteriors(s.features);
      at += k;
    }
  }
  return features;
}

PropinfOutcome propinf_attack_features(
    const Vec& target_features, const Mat& fleet_features,
    const std::vector<int>& fleet_labels,
    const std::vector<data::PropertyProportion>& label_set,
    const PropinfParams& params) {
  const Eigen::Index n = fleet_features.rows();
  const Eigen::Index dim = fleet_features.cols();
  const int num_labels = static_cast<int>(label_set.size());
  if (n == 0 || num_labels < 2)
    throw Error(ErrorCode::MissingFleet,
                "property attack needs a fleet with at least two proportions");
  if (static_cast<Eigen::Index>(fleet_labels.size()) != n)
    throw Error(ErrorCode::InvalidAttackConfig,
                "fleet labels do not match the feature rows");
  if (target_features.size() != dim)
    throw Error(ErrorCode::IncompatibleUpstream,
                "target features have a different dimension than the fleet");
  std::vector<bool> present(label_set.size(), false);
  for (int y : fleet_labels) {
    if (y < 0 || y >= num_labels)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "fleet label out of range");
    present[static_cast<std::size_t>(y)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    throw Error(ErrorCode::MissingFleet,
                "property attack needs at least two distinct proportions");
  if (params.epochs < 1 || !(params.learning_rate > 0.0) ||
      params.holdout_fraction < 0.0 || params.holdout_fraction >= 1.0)
    throw Error(ErrorCode::InvalidAttackConfig,
                "property attack hyperparameters out of range");

  // Per-label holdout split. With fraction 0 every row trains and the metric
  // is resubstitution accuracy.
  std::vector<Eigen::Index> train_rows, eval_rows;
  if (params.holdout_fraction == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) train_rows.push_back(i);
    eval_rows = train_rows;
  } else {
    Rng rng(derive_seed(params.seed, "holdout"));
    for (int label = 0; label < num_labels; ++label) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < n; ++i)
        if (fleet_labels[static_cast<std::size_t>(i)] == label)
          rows.push_back(i);
      if (rows.empty()) continue;
      auto perm = rng.permutation(rows.size());
      const std::size_t held = static_cast<std::size_t>(
          std::ceil(params.holdout_fraction * static_cast<double>(rows.size())));
      if (held >= rows.size())
        throw Error(ErrorCode::FleetTooSmall,
                    "holdout would leave no training rows for a proportion");
      for (std::size_t j = 0; j < rows.size(); ++j)
        (j < held ? eval_rows : train_rows).push_back(rows[perm[j]]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(eval_rows.begin(), eval_rows.end());
  }

  // Zero-initialized multinomial logistic regression, full-batch gradient
  // descent. Convex, deterministic, and inert on all-zero feature columns.
  PropinfModel attack;
  attack.labels = label_set;
  attack.weights = Mat::Zero(num_labels, dim);
  attack.bias = Vec::Zero(num_labels);
  const double inv_n = 1.0 / static_cast<double>(train_rows.size());
  Mat grad_w(num_labels, dim);
  Vec grad_b(num_labels);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    grad_w.setZero();
    grad_b.setZero();
    for (Eigen::Index i : train_rows) {
      const Vec x = fleet_features.row(i).transpose();
      const int y = fleet_labels[static_cast<std::size_t>(i)];
      Vec delta = attack.posteriors(x) - nn::one_hot(y, num_labels);
      grad_w += delta * x.transpose();
      grad_b += delta;
    }
    attack.weights -= params.learning_rate * inv_n * grad_w;
    attack.bias -= params.learning_rate * inv_n * grad_b;
  }
  if (!attack.weights.allFinite() || !attack.bias.allFinite())
    throw Error(ErrorCode::DivergedTraining,
                "meta-classifier parameters are not finite");

  PropinfOutcome out;
  out.fleet_result.scores.reserve(eval_rows.size());
  for (Eigen::Index i : eval_rows) {
    const Vec post = attack.posteriors(fleet_features.row(i).transpose());
    const int pred = nn::argmax_lowest(post);
    // Binary fleets get an AUC-ready score: the posterior of label 1.
    out.fleet_result.scores.push_back(num_labels == 2 ? post[1] : post[pred]);
    out.fleet_result.predictions.push_back(pred);
    out.fleet_result.ground_truth.push_back(
        fleet_labels[static_cast<std::size_t>(i)]);
  }
  metrics::fill_multiclass_metrics(out.fleet_result);
  if (num_labels == 2) {
    bool both = false;
    const auto& gt = out.fleet_result.ground_truth;
    both = std::count(gt.begin(), gt.end(), 1) > 0 &&
           std::count(gt.begin(), gt.end(), 0) > 0;
    if (both)
      out.fleet_result.metrics["auc"] =
          metrics::auc_score(out.fleet_result.scores, gt);
  }

  out.target_posteriors = attack.posteriors(target_features);
  out.predicted_label = nn::argmax_lowest(out.target_posteriors);
  out.predicted_proportion =
      label_set[static_cast<std::size_t>(out.predicted_label)];
  out.confidence = out.target_posteriors[out.predicted_label];
  out.attack = std::move(attack);
  return out;
}

std::vector<data::PropertyProportion> fleet_label_set(
    const std::vector<model::FleetMember>& fleet,
    std::vector<int>& fleet_labels) {
  if (fleet.empty())
    throw Error(ErrorCode::MissingFleet, "property attack fleet is empty");

  // Distinct proportions, ascending; class index is the position here.
  std::vector<data::PropertyProportion> label_set;
  for (const auto& member : fleet)
    if (std::find(label_set.begin(), label_set.end(), member.proportion) ==
        label_set.end())
      label_set.push_back(member.proportion);
  std::sort(label_set.begin(), label_set.end(),
            [](const auto& a, const auto& b) { return a.weights < b.weights; });
  if (label_set.size() < 2)
    throw Error(ErrorCode::MissingFleet,
                "property attack needs at least two distinct proportions");

  fleet_labels.clear();
  fleet_labels.reserve(fleet.size());
  for (const auto& member : fleet) {
    auto it = std::find(label_set.begin(), label_set.end(), member.proportion);
    fleet_labels.push_back(static_cast<int>(it - label_set.begin()));
  }
  return label_set;
}

PropinfOutcome propinf_attack(const model::TrainedModel& target,
                              const std::vector<model::FleetMember>& fleet,
                              const QueryAux& query_aux,
                              const PropinfParams& params) {
  std::vector<int> fleet_labels;
  const std::vector<data::PropertyProportion> label_set =
      fleet_label_set(fleet, fleet_labels);

  const Vec target_features = posterior_features(target, query_aux);
  Mat fleet_features(static_cast<Eigen::Index>(fleet.size()),
                     target_features.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const Vec row = posterior_features(fleet[i].model, query_aux);
    if (row.size() != target_features.size())
      throw Error(ErrorCode::IncompatibleUpstream,
                  "fleet features have inconsistent dimensions");
    fleet_features.row(static_cast<Eigen::Index>(i)) = row;
  }
  return propinf_attack_features(target_features, fleet_features, fleet_labels,
                                 label_set, params);
}

}  // namespace inferlab::propinf
