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

#include "inferlab/attrinf.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace inferlab::attrinf {

using nn::Vec;

Vec AttrinfModel::posteriors(const Vec& embedding) const {
  return nn::softmax(net.forward(embedding));
}

int AttrinfModel::predict(const Vec& embedding) const {
  return nn::argmax_lowest(net.forward(embedding));
}

AttrinfModel train_attrinf_model(const model::TrainedModel& target,
                                 const data::SampleSet& aux,
                                 const AttrinfParams& params) {
  if (aux.empty())
    throw Error(ErrorCode::InsufficientSamples,
                "attribute attack needs a non-empty auxiliary set");
  if (params.epochs < 1 || params.batch_size < 1 ||
      !(params.learning_rate > 0.0) || params.hidden < 1)
    throw Error(ErrorCode::InvalidAttackConfig,
                "attribute attack hyperparameters out of range");

  const int num_values = target.meta.num_attribute_values;
  std::set<int> seen;
  for (const auto& s : aux) {
    if (s.attribute < 0 || s.attribute >= num_values)
      throw Error(ErrorCode::InvalidSpec,
                  "auxiliary attribute label out of range");
    seen.insert(s.attribute);
  }
  if (seen.size() < 2)
    throw Error(ErrorCode::DegenerateLabels,
                "auxiliary set holds a single attribute value");

  std::vector<Vec> embeddings;
  embeddings.reserve(aux.size());
  for (const auto& s : aux) embeddings.push_back(target.embedding(s.features));

  AttrinfModel out;
  out.embedding_dim = static_cast<int>(embeddings.front().size());
  out.num_values = num_values;

  Rng init(derive_seed(params.seed, "init"));
  out.net.add_dense(out.embedding_dim, params.hidden);
  out.net.add_relu(params.hidden);
  out.net.add_dense(params.hidden, num_values);
  out.net.finalize(init);

  Vec& net_params = out.net.params();
  Vec grad(net_params.size());
  nn::Adam adam(static_cast<std::size_t>(net_params.size()),
                params.learning_rate);
  Rng shuffle(derive_seed(params.seed, "shuffle"));
  std::vector<Vec> acts;

  const std::size_t n = embeddings.size();
  const std::size_t batch = static_cast<std::size_t>(params.batch_size);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    auto order = shuffle.permutation(n);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      grad.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        Vec logits = out.net.forward(embeddings[i], acts);
        Vec g = nn::softmax(logits) -
                nn::one_hot(aux[i].attribute, num_values);
        out.net.backward(acts, g, grad);
      }
      grad /= static_cast<double>(stop - start);
      adam.step(net_params, grad);
    }
  }
  if (!net_params.allFinite())
    throw Error(ErrorCode::DivergedTraining,
                "attribute attack parameters are not finite");
  return out;
}

metrics::AttackResult attrinf_attack(const model::TrainedModel& target,
                                     const data::SampleSet& aux,
                                     const data::SampleSet& eval_set,
                                     const AttrinfParams& params) {
  if (eval_set.empty())
    throw Error(ErrorCode::InsufficientSamples,
                "attribute attack needs a non-empty evaluation set");
  AttrinfModel attack = train_attrinf_model(target, aux, params);

  metrics::AttackResult result;
  result.scores.reserve(eval_set.size());
  result.predictions.reserve(eval_set.size());
  result.ground_truth.reserve(eval_set.size());
  for (const auto& s : eval_set) {
    const Vec post = attack.posteriors(target.embedding(s.features));
    const int pred = nn::argmax_lowest(post);
    result.scores.push_back(post[pred]);
    result.predictions.push_back(pred);
    result.ground_truth.push_back(s.attribute);
  }
  metrics::fill_multiclass_metrics(result);

  std::size_t train_hits = 0;
  for (const auto& s : aux)
    if (attack.predict(target.embedding(s.features)) == s.attribute)
      ++train_hits;
  result.metrics["train_accuracy"] =
      static_cast<double>(train_hits) / static_cast<double>(aux.size());
  return result;
}

}  // namespace inferlab::attrinf
