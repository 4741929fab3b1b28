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

#include <filesystem>
#include <fstream>

#include "inferlab/model.hpp"

using namespace inferlab;
using namespace inferlab::model;

namespace {

data::Dataset clean_data(std::size_t n = 400, std::uint64_t seed = 10) {
  data::SyntheticSpec spec;
  spec.n_samples = n;
  spec.task_signal = 2.0;
  spec.noise = 0.05;
  return data::generate_synthetic(spec, seed);
}

data::Dataset noisy_data(std::size_t n = 600, std::uint64_t seed = 11) {
  data::SyntheticSpec spec;
  spec.n_samples = n;
  spec.task_signal = 0.3;
  spec.noise = 2.0;
  return data::generate_synthetic(spec, seed);
}

ModelConfig fast_mlp() {
  ModelConfig c;
  c.architecture = Architecture::Mlp;
  c.hidden = 16;
  c.batch_size = 64;
  c.max_epochs = 60;
  c.overfit_threshold = 1.0;  // disabled unless a test sets it
  return c;
}

void split(const data::Dataset& d, data::SampleSet& train,
           data::SampleSet& test, std::size_t n_train) {
  train.assign(d.samples.begin(), d.samples.begin() + n_train);
  test.assign(d.samples.begin() + n_train, d.samples.end());
}

}  // namespace

TEST_CASE("separable records reach near-perfect training accuracy") {
  auto d = clean_data();
  data::SampleSet train, test;
  split(d, train, test, 300);
  auto m = train_model(train, test, fast_mlp(), d.meta, 1);
  CHECK(m.log.back().train_accuracy >= 0.99);
  CHECK(m.log.back().test_accuracy >= 0.9);
  CHECK(m.epochs_run == static_cast<int>(m.log.size()));
}

TEST_CASE("training is deterministic in the seed") {
  auto d = clean_data(200);
  data::SampleSet train, test;
  split(d, train, test, 150);
  auto cfg = fast_mlp();
  cfg.max_epochs = 8;
  auto a = train_model(train, test, cfg, d.meta, 5);
  auto b = train_model(train, test, cfg, d.meta, 5);
  auto c = train_model(train, test, cfg, d.meta, 6);
  CHECK(a.net.params() == b.net.params());
  CHECK(a.net.params() != c.net.params());
}

TEST_CASE("max_epochs one trains exactly one epoch") {
  auto d = clean_data(200);
  data::SampleSet train, test;
  split(d, train, test, 150);
  auto cfg = fast_mlp();
  cfg.max_epochs = 1;
  auto m = train_model(train, test, cfg, d.meta, 2);
  CHECK(m.log.size() == 1);
  CHECK(m.epochs_run == 1);
}

TEST_CASE("overfit gap stops training early") {
  auto d = noisy_data();
  data::SampleSet train, test;
  split(d, train, test, 100);  // small train set, plenty of capacity
  auto cfg = fast_mlp();
  cfg.hidden = 48;
  cfg.max_epochs = 100;
  cfg.overfit_threshold = 0.15;
  auto m = train_model(train, test, cfg, d.meta, 3);
  REQUIRE(m.epochs_run < 100);
  // The stopping epoch is the first whose gap exceeds the threshold.
  for (std::size_t e = 0; e + 1 < m.log.size(); ++e)
    CHECK(m.log[e].train_accuracy - m.log[e].test_accuracy <= 0.15);
  CHECK(m.log.back().train_accuracy - m.log.back().test_accuracy > 0.15);
}

TEST_CASE("empty train set is rejected") {
  auto d = clean_data(50);
  data::SampleSet empty, test(d.samples.begin(), d.samples.end());
  try {
    train_model(empty, test, fast_mlp(), d.meta, 1);
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("absurd learning rate diverges loudly") {
  auto d = clean_data(100);
  data::SampleSet train, test;
  split(d, train, test, 80);
  auto cfg = fast_mlp();
  cfg.learning_rate = 1e200;
  cfg.max_epochs = 3;
  try {
    train_model(train, test, cfg, d.meta, 4);
    FAIL("expected DivergedTraining");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergedTraining);
  }
}

TEST_CASE("zero-noise dp override with a loose clip matches plain training") {
  auto d = clean_data(200);
  data::SampleSet train, test;
  split(d, train, test, 150);
  auto cfg = fast_mlp();
  cfg.max_epochs = 6;
  auto plain = train_model(train, test, cfg, d.meta, 9);

  auto dp_cfg = cfg;
  DPConfig dp;
  dp.clip_norm = 1e9;
  dp.noise_multiplier_override = 0.0;
  dp_cfg.dp = dp;
  auto noiseless = train_model(train, test, dp_cfg, d.meta, 9);
  CHECK(plain.net.params() == noiseless.net.params());
  CHECK(noiseless.noise_multiplier == 0.0);
}

TEST_CASE("tight clipping changes the trajectory, noise engages accountant") {
  auto d = clean_data(200);
  data::SampleSet train, test;
  split(d, train, test, 150);
  auto cfg = fast_mlp();
  cfg.max_epochs = 4;
  auto plain = train_model(train, test, cfg, d.meta, 9);

  auto clipped_cfg = cfg;
  DPConfig dp;
  dp.clip_norm = 1e-3;
  dp.noise_multiplier_override = 0.0;
  clipped_cfg.dp = dp;
  auto clipped = train_model(train, test, clipped_cfg, d.meta, 9);
  CHECK(plain.net.params() != clipped.net.params());

  auto noisy_cfg = cfg;
  DPConfig dp2;
  dp2.epsilon = 10.0;
  dp2.clip_norm = 1.0;
  noisy_cfg.dp = dp2;
  auto private_model = train_model(train, test, noisy_cfg, d.meta, 9);
  CHECK(private_model.noise_multiplier > 0.0);
}

TEST_CASE("checkpoint round trip preserves weights and log") {
  namespace fs = std::filesystem;
  auto d = clean_data(150);
  data::SampleSet train, test;
  split(d, train, test, 100);
  auto cfg = fast_mlp();
  cfg.max_epochs = 3;
  auto m = train_model(train, test, cfg, d.meta, 21);

  fs::path dir = fs::temp_directory_path() / "inferlab_ckpt_test";
  fs::remove_all(dir);
  save_checkpoint(m, dir.string());
  auto loaded = load_checkpoint(dir.string());
  CHECK(loaded.net.params() == m.net.params());
  CHECK(loaded.log.size() == m.log.size());
  CHECK(loaded.config.architecture == m.config.architecture);
  CHECK(loaded.seed == m.seed);

  // Same posteriors on a probe sample.
  const auto& probe = test.front().features;
  CHECK((loaded.posteriors(probe) - m.posteriors(probe)).norm() == 0.0);

  SUBCASE("missing checkpoint raises CheckpointMissing") {
    try {
      load_checkpoint((dir / "nowhere").string());
      FAIL("expected CheckpointMissing");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CheckpointMissing);
    }
  }
  SUBCASE("corrupted weights are rejected") {
    std::fstream f(dir / "weights.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(32);
    char junk = 0x7f;
    f.write(&junk, 1);
    f.close();
    try {
      load_checkpoint(dir.string());
      FAIL("expected SerializationError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SerializationError);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("all three architectures train and expose views") {
  auto d = clean_data(240);
  data::SampleSet train, test;
  split(d, train, test, 180);
  for (auto arch : {Architecture::SmallCnn, Architecture::Mlp,
                    Architecture::ResnetSmall}) {
    auto cfg = fast_mlp();
    cfg.architecture = arch;
    cfg.conv_channels = 4;
    cfg.max_epochs = arch == Architecture::SmallCnn ? 6 : 15;
    auto m = train_model(train, test, cfg, d.meta, 31);
    const auto& s = test.front();
    auto post = m.posteriors(s.features);
    CHECK(post.size() == d.meta.num_classes);
    CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(post.minCoeff() >= 0.0);
    auto emb = m.embedding(s.features);
    CHECK(emb.size() == m.embedding_dim());
    auto grad = m.last_layer_gradient(s.features, s.task_label);
    CHECK(grad.size() ==
          m.embedding_dim() * d.meta.num_classes + d.meta.num_classes);
    auto igrad = m.input_gradient(s.features, s.task_label);
    CHECK(igrad.size() == s.features.size());
    CHECK(m.loss(s.features, s.task_label) >= 0.0);
  }
}

TEST_CASE("uninitialized logits tie-break to the lowest class") {
  auto d = clean_data(50);
  TrainedModel m;
  m.meta = d.meta;
  m.config = fast_mlp();
  Rng rng(1);
  m.net = build_network(Architecture::Mlp, d.meta, m.config, rng);
  m.net.params().setZero();
  CHECK(m.predict(d.samples[0].features) == 0);
  auto post = m.posteriors(d.samples[0].features);
  CHECK(post[0] == doctest::Approx(0.25));
}

TEST_CASE("fleet training is deterministic and scheduling-independent") {
  auto d = clean_data(500, 77);
  data::SampleSet pool(d.samples.begin(), d.samples.begin() + 400);
  data::SampleSet test(d.samples.begin() + 400, d.samples.end());
  FleetSpec spec;
  spec.labels = {data::PropertyProportion({0.2, 0.8}),
                 data::PropertyProportion({0.5, 0.5})};
  spec.models_per_label = 2;
  spec.train_size = 80;
  auto cfg = fast_mlp();
  cfg.max_epochs = 4;

  auto serial = train_shadow_fleet(pool, test, spec, cfg, d.meta, 42, 1);
  auto threaded = train_shadow_fleet(pool, test, spec, cfg, d.meta, 42, 3);
  REQUIRE(serial.size() == 4);
  REQUIRE(threaded.size() == 4);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].model.net.params() == threaded[i].model.net.params());
    CHECK(serial[i].proportion == threaded[i].proportion);
  }

  FleetSpec bad;
  bad.labels = {};
  try {
    train_shadow_fleet(pool, test, bad, cfg, d.meta, 1, 1);
    FAIL("expected FleetTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FleetTooSmall);
  }
}
