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

#include "inferlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

namespace inferlab::data {

namespace fs = std::filesystem;
using nlohmann::json;

void PropertyProportion::validate(std::size_t num_values) const {
  if (weights.empty())
    throw Error(ErrorCode::InvalidSpec, "proportion has no weights");
  if (num_values != 0 && weights.size() != num_values)
    throw Error(ErrorCode::InvalidSpec,
                "proportion arity does not match the label axis");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw Error(ErrorCode::InvalidSpec, "proportion weight below zero");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidSpec, "proportion weights must sum to 1");
}

bool PropertyProportion::uniform(double tol) const {
  if (weights.empty()) return false;
  double u = 1.0 / static_cast<double>(weights.size());
  for (double w : weights)
    if (std::abs(w - u) > tol) return false;
  return true;
}

std::string PropertyProportion::label() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i) out << ':';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", weights[i]);
    out << buf;
  }
  return out.str();
}

int axis_value(const Sample& s, LabelAxis axis) {
  return axis == LabelAxis::Property ? s.property : s.attribute;
}

const char* axis_name(LabelAxis axis) {
  return axis == LabelAxis::Property ? "property" : "attribute";
}

LabelAxis axis_from_name(const std::string& name) {
  if (name == "property") return LabelAxis::Property;
  if (name == "attribute") return LabelAxis::Attribute;
  throw Error(ErrorCode::InvalidSpec, "unknown label axis: " + name);
}

namespace {

std::vector<int> exact_label_assignment(std::size_t n,
                                        const std::vector<double>& weights,
                                        Rng& rng) {
  auto counts = largest_remainder_counts(weights, n);
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t v = 0; v < counts.size(); ++v)
    labels.insert(labels.end(), counts[v], static_cast<int>(v));
  rng.shuffle(labels);
  return labels;
}

Eigen::VectorXd pattern(std::uint64_t seed, const std::string& name,
                        std::uint64_t index, int len) {
  Rng rng(derive_seed(seed, name, index));
  Eigen::VectorXd p(len);
  for (int i = 0; i < len; ++i) p[i] = rng.normal();
  return p;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const DatasetMeta& meta = spec.meta;
  if (spec.n_samples == 0)
    throw Error(ErrorCode::InvalidSpec, "n_samples must be positive");
  if (meta.height < 3 || meta.width < 1)
    throw Error(ErrorCode::InvalidSpec, "grid too small for three regions");
  if (meta.num_classes < 2 || meta.num_attribute_values < 2 ||
      meta.num_property_values < 2)
    throw Error(ErrorCode::InvalidSpec, "each label axis needs >= 2 values");

  std::vector<double> attr_w = spec.attribute_weights;
  if (attr_w.empty())
    attr_w.assign(meta.num_attribute_values,
                  1.0 / meta.num_attribute_values);
  std::vector<double> prop_w = spec.property_weights;
  if (prop_w.empty())
    prop_w.assign(meta.num_property_values, 1.0 / meta.num_property_values);
  PropertyProportion(attr_w).validate(meta.num_attribute_values);
  PropertyProportion(prop_w).validate(meta.num_property_values);

  // Three horizontal bands: task rows, attribute rows, property rows.
  const int dim = meta.feature_dim();
  const int task_rows = std::max(1, meta.height - 2 * (meta.height / 4) - 1);
  const int attr_rows = std::max(1, meta.height / 4);
  const int prop_rows = meta.height - task_rows - attr_rows;
  const int task_len = task_rows * meta.width;
  const int attr_len = attr_rows * meta.width;
  const int prop_len = prop_rows * meta.width;

  std::vector<Eigen::VectorXd> task_patterns, attr_patterns, prop_patterns;
  for (int k = 0; k < meta.num_classes; ++k)
    task_patterns.push_back(pattern(seed, "pattern/task", k, task_len));
  for (int a = 0; a < meta.num_attribute_values; ++a)
    attr_patterns.push_back(pattern(seed, "pattern/attribute", a, attr_len));
  for (int p = 0; p < meta.num_property_values; ++p)
    prop_patterns.push_back(pattern(seed, "pattern/property", p, prop_len));

  // Couplings: the class pattern is shifted by a per-(class, attribute) and
  // per-(class, property) component.
  std::vector<Eigen::VectorXd> attr_coupling, prop_coupling;
  for (int k = 0; k < meta.num_classes; ++k)
    for (int a = 0; a < meta.num_attribute_values; ++a)
      attr_coupling.push_back(pattern(
          seed, "pattern/task_x_attribute",
          static_cast<std::uint64_t>(k) * meta.num_attribute_values + a,
          task_len));
  for (int k = 0; k < meta.num_classes; ++k)
    for (int p = 0; p < meta.num_property_values; ++p)
      prop_coupling.push_back(pattern(
          seed, "pattern/task_x_property",
          static_cast<std::uint64_t>(k) * meta.num_property_values + p,
          task_len));

  Rng label_rng(derive_seed(seed, "labels"));
  std::vector<double> class_w(meta.num_classes, 1.0 / meta.num_classes);
  auto tasks = exact_label_assignment(spec.n_samples, class_w, label_rng);
  auto attrs = exact_label_assignment(spec.n_samples, attr_w, label_rng);
  auto props = exact_label_assignment(spec.n_samples, prop_w, label_rng);

  Rng noise_rng(derive_seed(seed, "noise"));
  Dataset out;
  out.meta = meta;
  out.samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    Sample s;
    s.id = i;
    s.task_label = tasks[i];
    s.attribute = attrs[i];
    s.property = props[i];
    s.features.resize(dim);

    Eigen::VectorXd task_part =
        spec.task_signal * task_patterns[s.task_label] +
        spec.attribute_task_coupling *
            attr_coupling[s.task_label * meta.num_attribute_values +
                          s.attribute] +
        spec.property_task_coupling *
            prop_coupling[s.task_label * meta.num_property_values +
                          s.property];
    for (int j = 0; j < task_len; ++j) s.features[j] = 0.5 + 0.2 * task_part[j];
    for (int j = 0; j < attr_len; ++j)
      s.features[task_len + j] =
          0.5 + 0.2 * spec.attribute_signal * attr_patterns[s.attribute][j];
    for (int j = 0; j < prop_len; ++j)
      s.features[task_len + attr_len + j] =
          0.5 + 0.2 * spec.property_signal * prop_patterns[s.property][j];

    for (int j = 0; j < dim; ++j) {
      s.features[j] += spec.noise * 0.2 * noise_rng.normal();
      s.features[j] = std::clamp(s.features[j], 0.0, 1.0);
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

SampleSet sample_with_proportion(const SampleSet& pool,
                                 const PropertyProportion& proportion,
                                 std::size_t n, std::uint64_t seed,
                                 LabelAxis axis) {
  proportion.validate();
  const std::size_t num_values = proportion.weights.size();
  auto counts = largest_remainder_counts(proportion.weights, n);

  std::vector<std::vector<std::size_t>> by_value(num_values);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    int v = axis_value(pool[i], axis);
    if (v < 0 || static_cast<std::size_t>(v) >= num_values) {
      if (proportion.weights.size() <= static_cast<std::size_t>(v))
        throw Error(ErrorCode::InvalidSpec,
                    "pool label value outside proportion arity");
    }
    by_value[static_cast<std::size_t>(v)].push_back(i);
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t v = 0; v < num_values; ++v) {
    if (by_value[v].size() < counts[v]) {
      std::ostringstream msg;
      msg << "value " << v << " on axis " << axis_name(axis) << ": need "
          << counts[v] << ", pool holds " << by_value[v].size();
      throw Error(ErrorCode::InsufficientSamples, msg.str());
    }
    std::vector<std::size_t> ids = by_value[v];
    rng.shuffle(ids);
    chosen.insert(chosen.end(), ids.begin(), ids.begin() + counts[v]);
  }

  SampleSet out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(pool[i]);
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return out;
}

std::vector<std::pair<PropertyProportion, SampleSet>> build_query_aux(
    const SampleSet& pool, const std::vector<PropertyProportion>& proportions,
    std::size_t n_per_set, std::uint64_t seed, LabelAxis axis) {
  if (proportions.empty())
    throw Error(ErrorCode::InvalidSpec, "no query proportions given");

  std::set<std::uint64_t> used;
  std::vector<std::pair<PropertyProportion, SampleSet>> out;
  for (std::size_t q = 0; q < proportions.size(); ++q) {
    SampleSet remaining;
    remaining.reserve(pool.size());
    for (const Sample& s : pool)
      if (!used.count(s.id)) remaining.push_back(s);
    SampleSet set = sample_with_proportion(
        remaining, proportions[q], n_per_set, derive_seed(seed, "query", q),
        axis);
    for (const Sample& s : set) used.insert(s.id);
    out.emplace_back(proportions[q], std::move(set));
  }
  return out;
}

namespace {

SampleSet remove_ids(const SampleSet& pool,
                     const std::set<std::uint64_t>& ids) {
  SampleSet out;
  out.reserve(pool.size());
  for (const Sample& s : pool)
    if (!ids.count(s.id)) out.push_back(s);
  return out;
}

// Equal counts per axis value, truncated to the smallest class when the
// request cannot be met.
SampleSet balanced_subset(const SampleSet& pool, std::size_t n,
                          std::uint64_t seed, LabelAxis axis,
                          int num_values) {
  std::vector<std::vector<std::size_t>> by_value(num_values);
  for (std::size_t i = 0; i < pool.size(); ++i)
    by_value[static_cast<std::size_t>(axis_value(pool[i], axis))].push_back(i);

  std::vector<double> uniform(num_values, 1.0 / num_values);
  auto want = largest_remainder_counts(uniform, n);
  std::size_t smallest = pool.size();
  for (const auto& ids : by_value) smallest = std::min(smallest, ids.size());
  bool feasible = true;
  for (std::size_t v = 0; v < want.size(); ++v)
    if (by_value[v].size() < want[v]) feasible = false;
  if (!feasible) {
    if (smallest == 0)
      throw Error(ErrorCode::InsufficientSamples,
                  "a label value is absent from the test pool");
    for (auto& w : want) w = smallest;
  }

  Rng rng(seed);
  SampleSet out;
  for (std::size_t v = 0; v < want.size(); ++v) {
    std::vector<std::size_t> ids = by_value[v];
    rng.shuffle(ids);
    for (std::size_t k = 0; k < want[v]; ++k) out.push_back(pool[ids[k]]);
  }
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return out;
}

SampleSet balanced_by_task(const SampleSet& pool, std::size_t n,
                           std::uint64_t seed, int num_classes) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < pool.size(); ++i)
    by_class[static_cast<std::size_t>(pool[i].task_label)].push_back(i);
  std::size_t per = n / static_cast<std::size_t>(num_classes);
  for (const auto& ids : by_class) per = std::min(per, ids.size());

  Rng rng(seed);
  SampleSet out;
  for (auto& ids_const : by_class) {
    std::vector<std::size_t> ids = ids_const;
    rng.shuffle(ids);
    for (std::size_t k = 0; k < per; ++k) out.push_back(pool[ids[k]]);
  }
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return out;
}

}  // namespace

DatasetBundle partition_dataset(const Dataset& dataset,
                                const PartitionSpec& spec,
                                std::uint64_t seed) {
  const double fractions[] = {
      spec.target_train_fraction, spec.target_test_fraction,
      spec.shadow_train_fraction, spec.shadow_test_fraction};
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0))
      throw Error(ErrorCode::InvalidSpec, "negative partition fraction");
    total += f;
  }
  if (total > 1.0 + 1e-9)
    throw Error(ErrorCode::InvalidSpec, "partition fractions sum above 1");
  if (!(spec.partial_fraction >= 0.0 && spec.partial_fraction <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "partial_fraction outside [0, 1]");

  const int num_values = dataset.meta.axis_values(spec.axis);
  // An unset proportion means "no composition bias": uniform over the axis.
  const PropertyProportion uniform(std::vector<double>(
      static_cast<std::size_t>(num_values), 1.0 / num_values));
  const PropertyProportion& target_prop =
      spec.target_train_proportion.weights.empty()
          ? uniform
          : spec.target_train_proportion;
  const PropertyProportion& shadow_prop =
      spec.shadow_train_proportion.weights.empty()
          ? uniform
          : spec.shadow_train_proportion;
  target_prop.validate(num_values);
  shadow_prop.validate(num_values);

  const std::size_t n = dataset.samples.size();
  const auto count = [&](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) +
                                               1e-9));
  };

  DatasetBundle bundle;
  bundle.meta = dataset.meta;
  bundle.axis = spec.axis;
  bundle.seed = seed;

  SampleSet pool = dataset.samples;
  bundle.target_train = sample_with_proportion(
      pool, target_prop, count(spec.target_train_fraction),
      derive_seed(seed, "partition/target_train"), spec.axis);
  std::set<std::uint64_t> used;
  for (auto id : ids_of(bundle.target_train)) used.insert(id);
  pool = remove_ids(pool, used);

  bundle.shadow_train = sample_with_proportion(
      pool, shadow_prop, count(spec.shadow_train_fraction),
      derive_seed(seed, "partition/shadow_train"), spec.axis);
  for (auto id : ids_of(bundle.shadow_train)) used.insert(id);
  pool = remove_ids(pool, used);

  bundle.target_test = balanced_subset(
      pool, count(spec.target_test_fraction),
      derive_seed(seed, "partition/target_test"), spec.axis, num_values);
  for (auto id : ids_of(bundle.target_test)) used.insert(id);
  pool = remove_ids(pool, used);

  bundle.shadow_test = balanced_subset(
      pool, count(spec.shadow_test_fraction),
      derive_seed(seed, "partition/shadow_test"), spec.axis, num_values);
  for (auto id : ids_of(bundle.shadow_test)) used.insert(id);

  const std::size_t n_partial = static_cast<std::size_t>(
      std::llround(spec.partial_fraction *
                   static_cast<double>(bundle.target_train.size())));
  if (spec.partial_per_class) {
    bundle.partial_aux =
        balanced_by_task(bundle.target_train, n_partial,
                         derive_seed(seed, "partition/partial_aux"),
                         dataset.meta.num_classes);
  } else {
    Rng rng(derive_seed(seed, "partition/partial_aux"));
    auto perm = rng.permutation(bundle.target_train.size());
    for (std::size_t k = 0; k < n_partial; ++k)
      bundle.partial_aux.push_back(bundle.target_train[perm[k]]);
    std::sort(bundle.partial_aux.begin(), bundle.partial_aux.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });
  }

  if (!spec.query_proportions.empty()) {
    SampleSet query_pool;
    std::set<std::uint64_t> train_ids;
  for (auto id : ids_of(bundle.target_train)) train_ids.insert(id);
    for (auto id : ids_of(bundle.shadow_train)) train_ids.insert(id);
    for (const Sample& s : dataset.samples)
      if (!train_ids.count(s.id)) query_pool.push_back(s);
    bundle.query_aux = build_query_aux(
        query_pool, spec.query_proportions, spec.query_set_size,
        derive_seed(seed, "partition/query_aux"), spec.axis);
  }

  if (!disjoint_ids(bundle.target_train, bundle.target_test) ||
      !disjoint_ids(bundle.target_train, bundle.shadow_train) ||
      !disjoint_ids(bundle.target_train, bundle.shadow_test) ||
      !disjoint_ids(bundle.target_test, bundle.shadow_train) ||
      !disjoint_ids(bundle.target_test, bundle.shadow_test) ||
      !disjoint_ids(bundle.shadow_train, bundle.shadow_test))
    throw Error(ErrorCode::DisjointnessViolation,
                "partitions overlap after sampling");
  return bundle;
}

namespace {

constexpr std::uint32_t kTensorMagic = 0x53444C49;  // "ILDS"
constexpr std::uint32_t kTensorVersion = 1;
constexpr int kSchemaVersion = 1;

void write_set(const fs::path& path, const SampleSet& set, int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::SerializationError,
                "cannot open " + path.string() + " for writing");
  auto put = [&](const void* p, std::size_t len) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
  };
  std::uint64_t n = set.size(), d = static_cast<std::uint64_t>(dim);
  put(&kTensorMagic, 4);
  put(&kTensorVersion, 4);
  put(&n, 8);
  put(&d, 8);
  for (const Sample& s : set) {
    std::int32_t labels[4] = {static_cast<std::int32_t>(s.task_label),
                              static_cast<std::int32_t>(s.attribute),
                              static_cast<std::int32_t>(s.property), 0};
    put(&s.id, 8);
    put(labels, sizeof(labels));
    put(s.features.data(), sizeof(double) * static_cast<std::size_t>(dim));
  }
  if (!out)
    throw Error(ErrorCode::SerializationError,
                "short write to " + path.string());
}

SampleSet read_set(const fs::path& path, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::SerializationError,
                "cannot open " + path.string());
  auto get = [&](void* p, std::size_t len) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
    if (!in)
      throw Error(ErrorCode::SerializationError,
                  "truncated tensor file " + path.string());
  };
  std::uint32_t magic = 0, version = 0;
  std::uint64_t n = 0, d = 0;
  get(&magic, 4);
  get(&version, 4);
  if (magic != kTensorMagic)
    throw Error(ErrorCode::SerializationError,
                "bad magic in " + path.string());
  if (version != kTensorVersion)
    throw Error(ErrorCode::SchemaMismatch,
                "unsupported tensor file version in " + path.string());
  get(&n, 8);
  get(&d, 8);
  if (d != static_cast<std::uint64_t>(dim))
    throw Error(ErrorCode::SerializationError,
                "feature dimension mismatch in " + path.string());
  SampleSet set;
  set.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Sample s;
    std::int32_t labels[4];
    get(&s.id, 8);
    get(labels, sizeof(labels));
    s.task_label = labels[0];
    s.attribute = labels[1];
    s.property = labels[2];
    s.features.resize(dim);
    get(s.features.data(), sizeof(double) * static_cast<std::size_t>(dim));
    set.push_back(std::move(s));
  }
  return set;
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::SerializationError,
                "cannot hash " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  return h;
}

json meta_to_json(const DatasetMeta& m) {
  return json{{"height", m.height},
              {"width", m.width},
              {"num_classes", m.num_classes},
              {"num_attribute_values", m.num_attribute_values},
              {"num_property_values", m.num_property_values}};
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  m.height = j.at("height").get<int>();
  m.width = j.at("width").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.num_attribute_values = j.at("num_attribute_values").get<int>();
  m.num_property_values = j.at("num_property_values").get<int>();
  return m;
}

}  // namespace

void save_bundle(const DatasetBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  const int dim = bundle.meta.feature_dim();

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["kind"] = "dataset_bundle";
  manifest["seed"] = bundle.seed;
  manifest["axis"] = axis_name(bundle.axis);
  manifest["meta"] = meta_to_json(bundle.meta);

  auto store = [&](const std::string& name, const SampleSet& set) {
    std::string file = name + ".bin";
    write_set(root / file, set, dim);
    manifest["partitions"][name] = {
        {"file", file},
        {"count", set.size()},
        {"hash", hash_hex(file_hash(root / file))},
        {"ids", ids_of(set)}};
  };
  store("target_train", bundle.target_train);
  store("target_test", bundle.target_test);
  store("shadow_train", bundle.shadow_train);
  store("shadow_test", bundle.shadow_test);

  manifest["partial_aux_ids"] = ids_of(bundle.partial_aux);
  manifest["query_aux"] = json::array();
  for (std::size_t q = 0; q < bundle.query_aux.size(); ++q) {
    std::string file = "query_" + std::to_string(q) + ".bin";
    write_set(root / file, bundle.query_aux[q].second, dim);
    manifest["query_aux"].push_back(
        {{"proportion", bundle.query_aux[q].first.weights},
         {"file", file},
         {"hash", hash_hex(file_hash(root / file))}});
  }

  std::ofstream out(root / "manifest.json");
  if (!out)
    throw Error(ErrorCode::SerializationError,
                "cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

DatasetBundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in)
    throw Error(ErrorCode::SerializationError,
                "missing manifest.json in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SerializationError,
                std::string("manifest parse failure: ") + e.what());
  }
  if (manifest.value("schema_version", -1) != kSchemaVersion)
    throw Error(ErrorCode::SchemaMismatch,
                "dataset bundle schema version mismatch");

  DatasetBundle bundle;
  bundle.meta = meta_from_json(manifest.at("meta"));
  bundle.axis = axis_from_name(manifest.at("axis").get<std::string>());
  bundle.seed = manifest.at("seed").get<std::uint64_t>();
  const int dim = bundle.meta.feature_dim();

  auto fetch = [&](const std::string& name) {
    const json& entry = manifest.at("partitions").at(name);
    fs::path file = root / entry.at("file").get<std::string>();
    if (!fs::exists(file))
      throw Error(ErrorCode::SerializationError,
                  "missing tensor file " + file.string());
    if (hash_hex(file_hash(file)) != entry.at("hash").get<std::string>())
      throw Error(ErrorCode::SerializationError,
                  "hash mismatch for " + file.string());
    SampleSet set = read_set(file, dim);
    auto ids = entry.at("ids").get<std::vector<std::uint64_t>>();
    if (ids != ids_of(set))
      throw Error(ErrorCode::SerializationError,
                  "id list mismatch for " + file.string());
    return set;
  };
  bundle.target_train = fetch("target_train");
  bundle.target_test = fetch("target_test");
  bundle.shadow_train = fetch("shadow_train");
  bundle.shadow_test = fetch("shadow_test");

  if (!disjoint_ids(bundle.target_train, bundle.target_test) ||
      !disjoint_ids(bundle.target_train, bundle.shadow_train) ||
      !disjoint_ids(bundle.target_train, bundle.shadow_test) ||
      !disjoint_ids(bundle.target_test, bundle.shadow_train) ||
      !disjoint_ids(bundle.target_test, bundle.shadow_test) ||
      !disjoint_ids(bundle.shadow_train, bundle.shadow_test))
    throw Error(ErrorCode::DisjointnessViolation,
                "loaded partitions overlap");

  auto partial_ids =
      manifest.at("partial_aux_ids").get<std::vector<std::uint64_t>>();
  std::set<std::uint64_t> wanted(partial_ids.begin(), partial_ids.end());
  for (const Sample& s : bundle.target_train)
    if (wanted.count(s.id)) bundle.partial_aux.push_back(s);
  if (bundle.partial_aux.size() != wanted.size())
    throw Error(ErrorCode::SerializationError,
                "partial_aux ids are not a subset of target_train");

  for (const json& entry : manifest.at("query_aux")) {
    fs::path file = root / entry.at("file").get<std::string>();
    if (hash_hex(file_hash(file)) != entry.at("hash").get<std::string>())
      throw Error(ErrorCode::SerializationError,
                  "hash mismatch for " + file.string());
    bundle.query_aux.emplace_back(
        PropertyProportion(entry.at("proportion").get<std::vector<double>>()),
        read_set(file, dim));
  }
  return bundle;
}

PropertyProportion empirical_proportion(const SampleSet& set, LabelAxis axis,
                                        int num_values) {
  if (set.empty())
    throw Error(ErrorCode::InvalidSpec, "empty sample set");
  std::vector<double> weights(static_cast<std::size_t>(num_values), 0.0);
  for (const Sample& s : set)
    weights[static_cast<std::size_t>(axis_value(s, axis))] += 1.0;
  for (double& w : weights) w /= static_cast<double>(set.size());
  return PropertyProportion(weights);
}

std::vector<std::uint64_t> ids_of(const SampleSet& set) {
  std::vector<std::uint64_t> ids;
  ids.reserve(set.size());
  for (const Sample& s : set) ids.push_back(s.id);
  return ids;
}

bool disjoint_ids(const SampleSet& a, const SampleSet& b) {
  std::set<std::uint64_t> ids;
  for (auto id : ids_of(a)) ids.insert(id);
  for (const Sample& s : b)
    if (ids.count(s.id)) return false;
  return true;
}

}  // namespace inferlab::data
