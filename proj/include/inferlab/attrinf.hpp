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

#ifndef INFERLAB_ATTRINF_HPP
#define INFERLAB_ATTRINF_HPP

#include <cstdint>

#include "inferlab/data.hpp"
#include "inferlab/metrics.hpp"
#include "inferlab/model.hpp"
#include "inferlab/nn.hpp"

namespace inferlab::attrinf {

// Attribute inference recovers a per-sample secondary label from the target
// model's penultimate-layer embedding of that sample. The attack model is a
// two-layer dense classifier trained with cross-entropy on (embedding,
// attribute) pairs from an auxiliary set the adversary labels themselves.
struct AttrinfParams {
  int epochs = 100;
  double learning_rate = 1e-2;
  int batch_size = 64;
  int hidden = 32;  // width of the single hidden layer
  std::uint64_t seed = 0;
};

struct AttrinfModel {
  int embedding_dim = 0;
  int num_values = 0;
  nn::Network net;

  nn::Vec posteriors(const nn::Vec& embedding) const;
  int predict(const nn::Vec& embedding) const;
};

// Trains the attribute classifier on the auxiliary set's embeddings.
// Throws DegenerateLabels when aux holds a single attribute value and
// InsufficientSamples when it is empty.
AttrinfModel train_attrinf_model(const model::TrainedModel& target,
                                 const data::SampleSet& aux,
                                 const AttrinfParams& params);

// Full attack: train on aux, score every eval sample. Result scores hold the
// posterior of the predicted attribute; metrics include accuracy, macro F1,
// and the attack model's training accuracy on aux.
metrics::AttackResult attrinf_attack(const model::TrainedModel& target,
                                     const data::SampleSet& aux,
                                     const data::SampleSet& eval_set,
                                     const AttrinfParams& params);

}  // namespace inferlab::attrinf

#endif  // INFERLAB_ATTRINF_HPP
