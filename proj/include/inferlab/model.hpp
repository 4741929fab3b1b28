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

#ifndef INFERLAB_MODEL_HPP
#define INFERLAB_MODEL_HPP

#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "inferlab/data.hpp"
#include "inferlab/nn.hpp"

namespace inferlab::model {

using nn::Vec;

enum class Architecture { SmallCnn, Mlp, ResnetSmall };

const char* architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

struct DPConfig {
  double epsilon = 10.0;  // presets 10, 20, 50
  double delta = 1e-5;
  double clip_norm = 1.0;
  // Test hook: fixes the noise multiplier and bypasses the accountant.
  std::optional<double> noise_multiplier_override;
};

struct ModelConfig {
  Architecture architecture = Architecture::SmallCnn;
  int max_epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-2;
  double overfit_threshold = 0.250;
  int hidden = 32;         // dense width; residual block width
  int conv_channels = 8;   // first conv block; the second doubles it
  std::optional<DPConfig> dp;
};

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct EpochStats {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_loss = 0.0;
};

// A trained classifier plus the views the attacks consume. All query methods
// are const and reentrant.
struct TrainedModel {
  ModelConfig config;
  data::DatasetMeta meta;
  std::uint64_t seed = 0;
  nn::Network net;
  std::vector<EpochStats> log;
  int epochs_run = 0;
  double noise_multiplier = 0.0;  // nonzero only for DP training

  Vec posteriors(const Vec& features) const;
  int predict(const Vec& features) const;  // ties to the lowest class index
  double loss(const Vec& features, int label) const;
  Vec embedding(const Vec& features) const;
  int embedding_dim() const { return net.embedding_dim(); }
  // Flattened gradient of the loss at the final dense layer (dW then db).
  Vec last_layer_gradient(const Vec& features, int label) const;
  Vec input_gradient(const Vec& features, int label) const;
  double accuracy(const data::SampleSet& set) const;
};

nn::Network build_network(Architecture arch, const data::DatasetMeta& meta,
                          const ModelConfig& config, Rng& rng);

// Mini-batch Adam training with the overfit stopping rule: training ends at
// the first epoch whose train/test accuracy gap exceeds overfit_threshold,
// or after max_epochs. With config.dp set, per-sample gradients are clipped
// to clip_norm and Gaussian noise sigma * clip_norm is added to each batch
// sum; sigma comes from the accountant unless overridden.
TrainedModel train_model(const data::SampleSet& train,
                         const data::SampleSet& test,
                         const ModelConfig& config,
                         const data::DatasetMeta& meta, std::uint64_t seed);

// Process-wide count of train_model calls. Lets callers assert that a
// protocol which promises not to train (e.g. partial-knowledge membership
// inference) really never did.
std::uint64_t train_invocations();

void save_checkpoint(const TrainedModel& model, const std::string& dir);
TrainedModel load_checkpoint(const std::string& dir);

struct FleetMember {
  data::PropertyProportion proportion;
  std::uint64_t seed = 0;
  TrainedModel model;
};

struct FleetSpec {
  std::vector<data::PropertyProportion> labels;
  int models_per_label = 10;
  std::size_t train_size = 400;
  data::LabelAxis axis = data::LabelAxis::Property;
};

// One shadow model per (label, replica): each training set is freshly drawn
// from the pool at the label's proportion. Jobs run on a small worker pool;
// results are ordered by (label, replica) regardless of scheduling.
std::vector<FleetMember> train_shadow_fleet(
    const data::SampleSet& pool, const data::SampleSet& test,
    const FleetSpec& spec, const ModelConfig& config,
    const data::DatasetMeta& meta, std::uint64_t seed, int workers = 1);

// Runs jobs 0..n-1 on `workers` threads. Exceptions propagate to the caller.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& job);

}  // namespace inferlab::model

#endif  // INFERLAB_MODEL_HPP
