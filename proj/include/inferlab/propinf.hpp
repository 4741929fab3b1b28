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

#ifndef INFERLAB_PROPINF_HPP
#define INFERLAB_PROPINF_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "inferlab/data.hpp"
#include "inferlab/metrics.hpp"
#include "inferlab/model.hpp"
#include "inferlab/nn.hpp"

namespace inferlab::propinf {

using QueryAux = std::vector<std::pair<data::PropertyProportion, data::SampleSet>>;

// Property inference recovers a global statistic of the target's training
// set: which proportion of a secondary label it was drawn with. A fleet of
// shadow models is trained per candidate proportion; each model is summarized
// by its posteriors on fixed query sets; a logistic meta-classifier separates
// the proportions and then scores the target model's summary.
struct PropinfParams {
  int epochs = 3000;             // full-batch gradient descent steps
  double learning_rate = 0.1;
  double holdout_fraction = 0.25;  // fleet share reserved for the metric
  std::uint64_t seed = 0;          // drives only the holdout split
};

// Multinomial logistic meta-classifier. Weights start at zero and train by
// full-batch gradient descent, so a feature coordinate that is zero on every
// training row keeps a zero weight and never influences the output.
struct PropinfModel {
  std::vector<data::PropertyProportion> labels;  // class index order
  nn::Mat weights;  // (labels, feature_dim)
  nn::Vec bias;     // (labels)

  nn::Vec posteriors(const nn::Vec& features) const;
  int predict(const nn::Vec& features) const;
};

// Indices of query_aux in the order the feature vector visits its sets
// (ascending proportion weight vectors, stable for ties).
std::vector<std::size_t> query_visit_order(const QueryAux& query_aux);

// The target's feature vector: posteriors on every query sample, concatenated
// sorted by proportion (ascending weight vectors, stable for ties), then
// sample position within the set, then class index. Length is
// sum over query sets of |set| * num_classes.
nn::Vec posterior_features(const model::TrainedModel& m,
                           const QueryAux& query_aux);

// Distinct fleet proportions in ascending weight order, filling each member's
// class index into fleet_labels. Throws MissingFleet when the fleet is empty
// or holds fewer than two distinct proportions.
std::vector<data::PropertyProportion> fleet_label_set(
    const std::vector<model::FleetMember>& fleet,
    std::vector<int>& fleet_labels);

struct PropinfOutcome {
  metrics::AttackResult fleet_result;  // held-out fleet metrics
  PropinfModel attack;
  int predicted_label = 0;
  data::PropertyProportion predicted_proportion;
  nn::Vec target_posteriors;  // meta-classifier posterior over labels
  double confidence = 0.0;    // posterior of the predicted label
};

// Core attack on pre-assembled feature rows. fleet_labels index into
// label_set. With holdout_fraction = 0 the metric is resubstitution accuracy
// over the whole fleet; otherwise a per-label split reserves that share of
// rows for evaluation and trains on the rest.
PropinfOutcome propinf_attack_features(const nn::Vec& target_features,
                                       const nn::Mat& fleet_features,
                                       const std::vector<int>& fleet_labels,
                                       const std::vector<data::PropertyProportion>& label_set,
                                       const PropinfParams& params);

// Standard attack: features are the models' posteriors on query_aux.
// Throws MissingFleet when the fleet is empty or holds fewer than two
// distinct proportions, InvalidAttackConfig when query_aux is empty.
PropinfOutcome propinf_attack(const model::TrainedModel& target,
                              const std::vector<model::FleetMember>& fleet,
                              const QueryAux& query_aux,
                              const PropinfParams& params);

}  // namespace inferlab::propinf

#endif  // INFERLAB_PROPINF_HPP
