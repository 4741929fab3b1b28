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

#include "inferlab/model.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "inferlab/dp.hpp"

namespace inferlab::model {

namespace fs = std::filesystem;
using nlohmann::json;

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::SmallCnn: return "small_cnn";
    case Architecture::Mlp: return "mlp";
    case Architecture::ResnetSmall: return "resnet_small";
  }
  return "unknown";
}

Architecture architecture_from_name(const std::string& name) {
  if (name == "small_cnn") return Architecture::SmallCnn;
  if (name == "mlp") return Architecture::Mlp;
  if (name == "resnet_small") return Architecture::ResnetSmall;
  throw Error(ErrorCode::InvalidSpec, "unknown architecture: " + name);
}

json model_config_to_json(const ModelConfig& c) {
  json j{{"architecture", architecture_name(c.architecture)},
         {"max_epochs", c.max_epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"overfit_threshold", c.overfit_threshold},
         {"hidden", c.hidden},
         {"conv_channels", c.conv_channels}};
  if (c.dp) {
    j["dp"] = {{"epsilon", c.dp->epsilon},
               {"delta", c.dp->delta},
               {"clip_norm", c.dp->clip_norm}};
    if (c.dp->noise_multiplier_override)
      j["dp"]["noise_multiplier_override"] = *c.dp->noise_multiplier_override;
  }
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.architecture =
      architecture_from_name(j.value("architecture", "small_cnn"));
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.overfit_threshold = j.value("overfit_threshold", c.overfit_threshold);
  c.hidden = j.value("hidden", c.hidden);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  if (j.contains("dp") && !j.at("dp").is_null()) {
    DPConfig dp;
    const json& d = j.at("dp");
    dp.epsilon = d.value("epsilon", dp.epsilon);
    dp.delta = d.value("delta", dp.delta);
    dp.clip_norm = d.value("clip_norm", dp.clip_norm);
    if (d.contains("noise_multiplier_override"))
      dp.noise_multiplier_override =
          d.at("noise_multiplier_override").get<double>();
    c.dp = dp;
  }
  return c;
}

nn::Network build_network(Architecture arch, const data::DatasetMeta& meta,
                          const ModelConfig& config, Rng& rng) {
  nn::Network net;
  const int d = meta.feature_dim();
  const int k = meta.num_classes;
  switch (arch) {
    case Architecture::SmallCnn: {
      if (meta.height % 4 != 0 || meta.width % 4 != 0)
        throw Error(ErrorCode::InvalidSpec,
                    "small_cnn needs grid dims divisible by 4");
      int c1 = config.conv_channels, c2 = 2 * config.conv_channels;
      nn::Shape3 s0{1, meta.height, meta.width};
      net.add_conv3x3(s0, c1);
      net.add_relu(c1 * s0.h * s0.w);
      net.add_avgpool2({c1, s0.h, s0.w});
      nn::Shape3 s1{c1, s0.h / 2, s0.w / 2};
      net.add_conv3x3(s1, c2);
      net.add_relu(c2 * s1.h * s1.w);
      net.add_avgpool2({c2, s1.h, s1.w});
      int flat = c2 * (s1.h / 2) * (s1.w / 2);
      net.add_dense(flat, config.hidden);
      net.add_relu(config.hidden);
      net.add_dense(config.hidden, k);
      break;
    }
    case Architecture::Mlp:
      net.add_dense(d, 2 * config.hidden);
      net.add_relu(2 * config.hidden);
      net.add_dense(2 * config.hidden, config.hidden);
      net.add_relu(config.hidden);
      net.add_dense(config.hidden, k);
      break;
    case Architecture::ResnetSmall:
      net.add_dense(d, config.hidden);
      net.add_relu(config.hidden);
      net.add_residual_dense(config.hidden, config.hidden);
      net.add_residual_dense(config.hidden, config.hidden);
      net.add_residual_dense(config.hidden, config.hidden);
      net.add_dense(config.hidden, k);
      break;
  }
  net.finalize(rng);
  return net;
}

Vec TrainedModel::posteriors(const Vec& features) const {
  return nn::softmax(net.forward(features));
}

int TrainedModel::predict(const Vec& features) const {
  return nn::argmax_lowest(net.forward(features));
}

double TrainedModel::loss(const Vec& features, int label) const {
  return nn::cross_entropy_from_probs(posteriors(features), label);
}

Vec TrainedModel::embedding(const Vec& features) const {
  return net.embedding(features);
}

Vec TrainedModel::last_layer_gradient(const Vec& features, int label) const {
  std::vector<Vec> acts;
  Vec logits = net.forward(features, acts);
  Vec g = nn::softmax(logits) - nn::one_hot(label, meta.num_classes);
  Vec grad = Vec::Zero(net.params().size());
  net.backward(acts, g, grad);
  auto [offset, count] = net.last_layer_slice();
  return grad.segment(static_cast<Eigen::Index>(offset),
                      static_cast<Eigen::Index>(count));
}

Vec TrainedModel::input_gradient(const Vec& features, int label) const {
  std::vector<Vec> acts;
  Vec logits = net.forward(features, acts);
  Vec g = nn::softmax(logits) - nn::one_hot(label, meta.num_classes);
  Vec grad = Vec::Zero(net.params().size());
  Vec grad_input;
  net.backward(acts, g, grad, &grad_input);
  return grad_input;
}

double TrainedModel::accuracy(const data::SampleSet& set) const {
  if (set.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : set)
    if (predict(s.features) == s.task_label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

namespace {
std::atomic<std::uint64_t> g_train_invocations{0};
}  // namespace

std::uint64_t train_invocations() { return g_train_invocations.load(); }

TrainedModel train_model(const data::SampleSet& train,
                         const data::SampleSet& test,
                         const ModelConfig& config,
                         const data::DatasetMeta& meta, std::uint64_t seed) {
  g_train_invocations.fetch_add(1);
  if (train.empty() || test.empty())
    throw Error(ErrorCode::InvalidSpec, "train and test sets must be non-empty");
  if (config.batch_size < 1 || config.max_epochs < 0)
    throw Error(ErrorCode::InvalidSpec, "batch_size must be >= 1, max_epochs >= 0");
  if (!(config.learning_rate > 0.0))
    throw Error(ErrorCode::InvalidSpec, "learning rate must be positive");
  for (const auto& s : train)
    if (s.task_label < 0 || s.task_label >= meta.num_classes)
      throw Error(ErrorCode::InvalidSpec, "task label outside num_classes");

  TrainedModel out;
  out.config = config;
  out.meta = meta;
  out.seed = seed;

  Rng init_rng(derive_seed(seed, "init"));
  out.net = build_network(config.architecture, meta, config, init_rng);
  nn::Network& net = out.net;

  const std::size_t n = train.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const long steps_per_epoch =
      static_cast<long>((n + batch - 1) / batch);

  double sigma = 0.0;
  if (config.dp) {
    if (config.dp->noise_multiplier_override) {
      sigma = *config.dp->noise_multiplier_override;
      if (sigma < 0.0)
        throw Error(ErrorCode::AccountingError,
                    "noise multiplier override below zero");
    } else {
      double q = std::min(1.0, static_cast<double>(batch) /
                                   static_cast<double>(n));
      sigma = dp::noise_multiplier_for(
          config.dp->epsilon, config.dp->delta, q,
          steps_per_epoch * static_cast<long>(config.max_epochs));
    }
    if (!(config.dp->clip_norm > 0.0))
      throw Error(ErrorCode::InvalidSpec, "clip_norm must be positive");
  }
  out.noise_multiplier = sigma;

  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  Rng noise_rng(derive_seed(seed, "dp_noise"));
  nn::Adam adam(net.param_count(), config.learning_rate);

  const Eigen::Index pcount = net.params().size();
  Vec batch_grad(pcount), sample_grad(pcount);
  std::vector<Vec> acts;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto order = shuffle_rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      std::size_t stop = std::min(n, start + batch);
      batch_grad.setZero();
      for (std::size_t bi = start; bi < stop; ++bi) {
        const data::Sample& s = train[order[bi]];
        Vec logits = net.forward(s.features, acts);
        Vec probs = nn::softmax(logits);
        loss_sum += nn::cross_entropy_from_probs(probs, s.task_label);
        Vec g = probs - nn::one_hot(s.task_label, meta.num_classes);
        if (config.dp) {
          sample_grad.setZero();
          net.backward(acts, g, sample_grad);
          nn::clip_to_norm(sample_grad, config.dp->clip_norm);
          batch_grad += sample_grad;
        } else {
          net.backward(acts, g, batch_grad);
        }
      }
      if (config.dp && sigma > 0.0) {
        double scale = sigma * config.dp->clip_norm;
        for (Eigen::Index i = 0; i < pcount; ++i)
          batch_grad[i] += scale * noise_rng.normal();
      }
      batch_grad /= static_cast<double>(stop - start);
      adam.step(net.params(), batch_grad);
    }
    double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss) || !net.params().allFinite())
      throw Error(ErrorCode::DivergedTraining,
                  "non-finite loss or parameters at epoch " +
                      std::to_string(epoch));

    EpochStats stats;
    stats.train_loss = mean_loss;
    stats.train_accuracy = out.accuracy(train);
    stats.test_accuracy = out.accuracy(test);
    out.log.push_back(stats);
    out.epochs_run = epoch;
    if (stats.train_accuracy - stats.test_accuracy >
        config.overfit_threshold)
      break;
  }
  return out;
}

namespace {

constexpr std::uint32_t kWeightsMagic = 0x54574C49;  // "ILWT"
constexpr std::uint32_t kWeightsVersion = 1;
constexpr int kSchemaVersion = 1;

std::uint64_t blob_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::SerializationError, "cannot hash " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  return h;
}

json meta_to_json(const data::DatasetMeta& m) {
  return json{{"height", m.height},
              {"width", m.width},
              {"num_classes", m.num_classes},
              {"num_attribute_values", m.num_attribute_values},
              {"num_property_values", m.num_property_values}};
}

data::DatasetMeta meta_from_json(const json& j) {
  data::DatasetMeta m;
  m.height = j.at("height").get<int>();
  m.width = j.at("width").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.num_attribute_values = j.at("num_attribute_values").get<int>();
  m.num_property_values = j.at("num_property_values").get<int>();
  return m;
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);

  {
    std::ofstream out(root / "weights.bin", std::ios::binary);
    if (!out)
      throw Error(ErrorCode::SerializationError,
                  "cannot write weights in " + dir);
    std::uint64_t count = static_cast<std::uint64_t>(model.net.params().size());
    out.write(reinterpret_cast<const char*>(&kWeightsMagic), 4);
    out.write(reinterpret_cast<const char*>(&kWeightsVersion), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(model.net.params().data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out)
      throw Error(ErrorCode::SerializationError,
                  "short write to weights in " + dir);
  }

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "model_checkpoint";
  manifest["config"] = model_config_to_json(model.config);
  manifest["meta"] = meta_to_json(model.meta);
  manifest["seed"] = model.seed;
  manifest["epochs_run"] = model.epochs_run;
  manifest["noise_multiplier"] = model.noise_multiplier;
  manifest["log"] = json::array();
  for (const auto& e : model.log)
    manifest["log"].push_back({{"train_accuracy", e.train_accuracy},
                               {"test_accuracy", e.test_accuracy},
                               {"train_loss", e.train_loss}});
  manifest["weights"] = {
      {"file", "weights.bin"},
      {"count", model.net.params().size()},
      {"hash", hash_hex(blob_hash(root / "weights.bin"))}};

  std::ofstream out(root / "manifest.json");
  if (!out)
    throw Error(ErrorCode::SerializationError,
                "cannot write checkpoint manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

TrainedModel load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "manifest.json"))
    throw Error(ErrorCode::CheckpointMissing,
                "no checkpoint manifest in " + dir);
  json manifest;
  {
    std::ifstream in(root / "manifest.json");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SerializationError,
                  std::string("checkpoint manifest parse failure: ") +
                      e.what());
    }
  }
  if (manifest.value("schema_version", -1) != kSchemaVersion)
    throw Error(ErrorCode::SchemaMismatch,
                "checkpoint schema version mismatch");

  TrainedModel model;
  model.config = model_config_from_json(manifest.at("config"));
  model.meta = meta_from_json(manifest.at("meta"));
  model.seed = manifest.at("seed").get<std::uint64_t>();
  model.epochs_run = manifest.at("epochs_run").get<int>();
  model.noise_multiplier = manifest.at("noise_multiplier").get<double>();
  for (const json& e : manifest.at("log")) {
    EpochStats stats;
    stats.train_accuracy = e.at("train_accuracy").get<double>();
    stats.test_accuracy = e.at("test_accuracy").get<double>();
    stats.train_loss = e.at("train_loss").get<double>();
    model.log.push_back(stats);
  }

  fs::path weights = root / manifest.at("weights").at("file").get<std::string>();
  if (!fs::exists(weights))
    throw Error(ErrorCode::CheckpointMissing,
                "missing weights file " + weights.string());
  if (hash_hex(blob_hash(weights)) !=
      manifest.at("weights").at("hash").get<std::string>())
    throw Error(ErrorCode::SerializationError,
                "weights hash mismatch in " + dir);

  Rng dummy(1);
  model.net = build_network(model.config.architecture, model.meta,
                            model.config, dummy);

  std::ifstream in(weights, std::ios::binary);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in || magic != kWeightsMagic)
    throw Error(ErrorCode::SerializationError,
                "bad weights header in " + dir);
  if (version != kWeightsVersion)
    throw Error(ErrorCode::SchemaMismatch, "weights version mismatch");
  if (count != static_cast<std::uint64_t>(model.net.params().size()))
    throw Error(ErrorCode::SerializationError,
                "weights count does not match the architecture");
  in.read(reinterpret_cast<char*>(model.net.params().data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in)
    throw Error(ErrorCode::SerializationError,
                "truncated weights file in " + dir);
  return model;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& job) {
  if (n == 0) return;
  workers = std::max(1, workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(
      static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          job(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<FleetMember> train_shadow_fleet(
    const data::SampleSet& pool, const data::SampleSet& test,
    const FleetSpec& spec, const ModelConfig& config,
    const data::DatasetMeta& meta, std::uint64_t seed, int workers) {
  if (spec.labels.empty() || spec.models_per_label < 1)
    throw Error(ErrorCode::FleetTooSmall,
                "fleet needs at least one label and one model per label");
  if (spec.train_size == 0)
    throw Error(ErrorCode::InvalidSpec, "fleet train_size must be positive");

  struct Job {
    std::size_t label_index;
    int replica;
  };
  std::vector<Job> jobs;
  for (std::size_t li = 0; li < spec.labels.size(); ++li)
    for (int r = 0; r < spec.models_per_label; ++r)
      jobs.push_back({li, r});

  std::vector<FleetMember> fleet(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const data::PropertyProportion& label = spec.labels[job.label_index];
    std::uint64_t member_seed =
        derive_seed(seed, "fleet/" + label.label(),
                    static_cast<std::uint64_t>(job.replica));
    data::SampleSet train = data::sample_with_proportion(
        pool, label, spec.train_size, derive_seed(member_seed, "draw"),
        spec.axis);
    FleetMember member;
    member.proportion = label;
    member.seed = member_seed;
    member.model = train_model(train, test, config, meta, member_seed);
    fleet[j] = std::move(member);
  });
  return fleet;
}

}  // namespace inferlab::model
