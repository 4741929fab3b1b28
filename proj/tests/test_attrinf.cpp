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

#include "inferlab/attrinf.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "inferlab/data.hpp"
#include "inferlab/model.hpp"

using namespace inferlab;
using attrinf::AttrinfParams;
using attrinf::attrinf_attack;
using attrinf::train_attrinf_model;

namespace {

// A single-dense target whose "embedding" is the raw input, so embedding
// dimension 0 carries whatever the feature construction put there.
model::TrainedModel passthrough_target(const data::DatasetMeta& meta) {
  model::TrainedModel m;
  m.meta = meta;
  nn::Network net;
  net.add_dense(meta.feature_dim(), meta.num_classes);
  Rng rng(3);
  net.finalize(rng);
  m.net = std::move(net);
  return m;
}

data::DatasetMeta flat_meta() {
  data::DatasetMeta meta;
  meta.height = 1;
  meta.width = 4;
  meta.num_classes = 2;
  meta.num_attribute_values = 2;
  return meta;
}

// Feature dimension 0 encodes the attribute with a 0.7 margin; the rest is
// uniform noise.
data::SampleSet planted_samples(std::size_t n, std::uint64_t seed,
                                const data::DatasetMeta& meta) {
  Rng rng(seed);
  data::SampleSet out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data::Sample s;
    s.id = i;
    s.attribute = static_cast<int>(i % 2);
    s.features = Eigen::VectorXd(meta.feature_dim());
    for (Eigen::Index d = 0; d < s.features.size(); ++d)
      s.features[d] = rng.uniform();
    s.features[0] =
        0.1 + 0.8 * s.attribute + 0.05 * (rng.uniform() - 0.5);
    out.push_back(std::move(s));
  }
  return out;
}

AttrinfParams fast_params() {
  AttrinfParams p;
  p.epochs = 60;
  p.seed = 5;
  return p;
}

struct TrainedRig {
  data::DatasetMeta meta;
  model::TrainedModel target;
  data::SampleSet aux;
  data::SampleSet eval_set;
};

// A really trained target on synthetic data whose attribute pattern also
// perturbs the task pattern, so the learned representation keeps it.
const TrainedRig& trained_rig() {
  static const TrainedRig rig = [] {
    data::SyntheticSpec spec;
    spec.n_samples = 900;
    spec.attribute_signal = 1.0;
    spec.attribute_task_coupling = 0.5;
    auto dataset = data::generate_synthetic(spec, 31);

    model::ModelConfig config;
    config.architecture = model::Architecture::Mlp;
    config.hidden = 16;
    config.batch_size = 64;
    config.max_epochs = 40;
    config.overfit_threshold = 1e9;

    TrainedRig r;
    r.meta = dataset.meta;
    data::SampleSet train(dataset.samples.begin(),
                          dataset.samples.begin() + 500);
    data::SampleSet test(dataset.samples.begin() + 500,
                         dataset.samples.begin() + 700);
    r.aux = data::SampleSet(dataset.samples.begin() + 700,
                            dataset.samples.begin() + 820);
    r.eval_set = data::SampleSet(dataset.samples.begin() + 820,
                                 dataset.samples.end());
    r.target = model::train_model(train, test, config, dataset.meta, 32);
    return r;
  }();
  return rig;
}

}  // namespace

TEST_CASE("attribute planted in embedding dimension 0 is recovered") {
  const auto meta = flat_meta();
  const auto target = passthrough_target(meta);
  const auto aux = planted_samples(120, 41, meta);
  const auto eval_set = planted_samples(80, 42, meta);

  // Separability oracle first: the attribute classes must not overlap on
  // embedding dimension 0 before the attack is asked to find the split.
  double max0 = -1.0, min1 = 2.0;
  for (const auto& set : {aux, eval_set})
    for (const auto& s : set) {
      const double e0 = target.embedding(s.features)[0];
      if (s.attribute == 0)
        max0 = std::max(max0, e0);
      else
        min1 = std::min(min1, e0);
    }
  REQUIRE(max0 < min1);

  auto result = attrinf_attack(target, aux, eval_set, fast_params());
  CHECK(result.scores.size() == eval_set.size());
  CHECK(result.predictions.size() == eval_set.size());
  CHECK(result.metrics.at("accuracy") >= 0.95);
  CHECK(result.metrics.at("f1") >= 0.95);
  for (double sc : result.scores) {
    CHECK(sc >= 0.0);
    CHECK(sc <= 1.0);
  }
}

TEST_CASE("trained target embeddings still carry the attribute") {
  const auto& rig = trained_rig();
  auto result = attrinf_attack(rig.target, rig.aux, rig.eval_set,
                               fast_params());
  CHECK(result.metrics.at("accuracy") > 0.75);
  CHECK(result.metrics.count("f1") == 1);
  CHECK(result.metrics.count("train_accuracy") == 1);
}

TEST_CASE("evaluating on the auxiliary set matches training accuracy") {
  const auto meta = flat_meta();
  const auto target = passthrough_target(meta);
  const auto aux = planted_samples(100, 43, meta);
  auto result = attrinf_attack(target, aux, aux, fast_params());
  CHECK(result.metrics.at("accuracy") >=
        result.metrics.at("train_accuracy") - 0.05);
}

TEST_CASE("attack is deterministic for a fixed seed") {
  const auto meta = flat_meta();
  const auto target = passthrough_target(meta);
  const auto aux = planted_samples(60, 44, meta);
  const auto eval_set = planted_samples(40, 45, meta);
  auto params = fast_params();
  params.epochs = 10;
  auto a = attrinf_attack(target, aux, eval_set, params);
  auto b = attrinf_attack(target, aux, eval_set, params);
  CHECK(a.scores == b.scores);
  CHECK(a.predictions == b.predictions);
  CHECK(a.metrics == b.metrics);
}

TEST_CASE("degenerate and invalid inputs are rejected") {
  const auto meta = flat_meta();
  const auto target = passthrough_target(meta);
  auto aux = planted_samples(40, 46, meta);
  const auto eval_set = planted_samples(20, 47, meta);
  const auto params = fast_params();

  SUBCASE("single attribute value") {
    for (auto& s : aux) s.attribute = 1;
    CHECK_THROWS_WITH_AS(attrinf_attack(target, aux, eval_set, params),
                         doctest::Contains("single attribute"), Error);
    try {
      attrinf_attack(target, aux, eval_set, params);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateLabels);
    }
  }
  SUBCASE("empty auxiliary set") {
    CHECK_THROWS_AS(attrinf_attack(target, {}, eval_set, params), Error);
  }
  SUBCASE("empty evaluation set") {
    CHECK_THROWS_AS(attrinf_attack(target, aux, {}, params), Error);
  }
  SUBCASE("attribute label out of range") {
    aux[3].attribute = meta.num_attribute_values;
    CHECK_THROWS_AS(train_attrinf_model(target, aux, params), Error);
  }
  SUBCASE("hyperparameters out of range") {
    auto bad = params;
    bad.epochs = 0;
    CHECK_THROWS_AS(train_attrinf_model(target, aux, bad), Error);
    bad = params;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train_attrinf_model(target, aux, bad), Error);
  }
}
