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
#include <set>

#include "inferlab/data.hpp"

using namespace inferlab;
using namespace inferlab::data;

namespace {

Dataset tiny_dataset(std::size_t n = 1000, std::uint64_t seed = 42) {
  SyntheticSpec spec;
  spec.n_samples = n;
  spec.meta.num_classes = 4;
  return generate_synthetic(spec, seed);
}

PartitionSpec quarter_spec() {
  PartitionSpec spec;
  spec.target_train_proportion = PropertyProportion({0.5, 0.5});
  spec.shadow_train_proportion = PropertyProportion({0.5, 0.5});
  spec.query_proportions = {PropertyProportion({0.2, 0.8}),
                            PropertyProportion({0.5, 0.5})};
  spec.query_set_size = 16;
  return spec;
}

bool sets_equal(const SampleSet& a, const SampleSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].task_label != b[i].task_label ||
        a[i].attribute != b[i].attribute || a[i].property != b[i].property)
      return false;
    if (a[i].features != b[i].features) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("synthetic generator ranges and exact label counts") {
  SyntheticSpec spec;
  spec.n_samples = 600;
  spec.property_weights = {0.3, 0.7};
  auto dataset = generate_synthetic(spec, 7);
  REQUIRE(dataset.samples.size() == 600);

  std::size_t prop1 = 0;
  for (const auto& s : dataset.samples) {
    CHECK(s.features.minCoeff() >= 0.0);
    CHECK(s.features.maxCoeff() <= 1.0);
    CHECK(s.task_label >= 0);
    CHECK(s.task_label < spec.meta.num_classes);
    if (s.property == 1) ++prop1;
  }
  CHECK(prop1 == 420);  // exact apportionment of 0.7 over 600

  auto again = generate_synthetic(spec, 7);
  CHECK(sets_equal(dataset.samples, again.samples));
  auto other = generate_synthetic(spec, 8);
  CHECK_FALSE(sets_equal(dataset.samples, other.samples));
}

TEST_CASE("quarter partition of 1000 samples gives four disjoint 250 sets") {
  auto dataset = tiny_dataset();
  auto bundle = partition_dataset(dataset, quarter_spec(), 99);
  CHECK(bundle.target_train.size() == 250);
  CHECK(bundle.target_test.size() == 250);
  CHECK(bundle.shadow_train.size() == 250);
  CHECK(bundle.shadow_test.size() == 250);
  CHECK(disjoint_ids(bundle.target_train, bundle.target_test));
  CHECK(disjoint_ids(bundle.target_train, bundle.shadow_train));
  CHECK(disjoint_ids(bundle.shadow_train, bundle.shadow_test));
  CHECK(disjoint_ids(bundle.target_test, bundle.shadow_test));
}

TEST_CASE("train partitions hit the requested proportion exactly") {
  auto dataset = tiny_dataset();
  auto spec = quarter_spec();
  spec.target_train_proportion = PropertyProportion({0.2, 0.8});
  auto bundle = partition_dataset(dataset, spec, 3);
  auto p = empirical_proportion(bundle.target_train, LabelAxis::Property, 2);
  CHECK(p.weights[0] == doctest::Approx(0.2));
  CHECK(p.weights[1] == doctest::Approx(0.8));
}

TEST_CASE("test partitions are balanced across property") {
  auto dataset = tiny_dataset();
  auto spec = quarter_spec();
  spec.target_train_proportion = PropertyProportion({0.3, 0.7});
  auto bundle = partition_dataset(dataset, spec, 11);
  std::size_t c0 = 0, c1 = 0;
  for (const auto& s : bundle.target_test) (s.property ? c1 : c0) += 1;
  CHECK(c0 == c1);
  for (const auto& s : bundle.shadow_test) (s.property ? c1 : c0) += 1;
}

TEST_CASE("partial aux is a subset of target train") {
  auto dataset = tiny_dataset();
  auto spec = quarter_spec();
  spec.partial_fraction = 0.4;
  auto bundle = partition_dataset(dataset, spec, 5);
  CHECK(bundle.partial_aux.size() == 100);
  std::set<std::uint64_t> train;
  for (auto id : ids_of(bundle.target_train)) train.insert(id);
  for (const auto& s : bundle.partial_aux) CHECK(train.count(s.id) == 1);

  spec.partial_per_class = true;
  auto balanced = partition_dataset(dataset, spec, 5);
  std::vector<int> per_class(4, 0);
  for (const auto& s : balanced.partial_aux) per_class[s.task_label] += 1;
  for (int c = 1; c < 4; ++c) CHECK(per_class[c] == per_class[0]);
}

TEST_CASE("query aux sets avoid both train partitions and each other") {
  auto dataset = tiny_dataset();
  auto bundle = partition_dataset(dataset, quarter_spec(), 17);
  REQUIRE(bundle.query_aux.size() == 2);
  std::set<std::uint64_t> train;
  for (auto id : ids_of(bundle.target_train)) train.insert(id);
  for (auto id : ids_of(bundle.shadow_train)) train.insert(id);
  std::set<std::uint64_t> seen;
  for (const auto& [prop, set] : bundle.query_aux) {
    CHECK(set.size() == 16);
    for (const auto& s : set) {
      CHECK(train.count(s.id) == 0);
      CHECK(seen.insert(s.id).second);
    }
  }
  // First query set matches its requested 0.2:0.8 split: 3.2 rounds to 3/13.
  std::size_t p0 = 0;
  for (const auto& s : bundle.query_aux[0].second)
    if (s.property == 0) ++p0;
  CHECK(p0 == 3);
}

TEST_CASE("partition rejects bad specs") {
  auto dataset = tiny_dataset();
  auto spec = quarter_spec();
  spec.target_train_fraction = 0.5;
  spec.target_test_fraction = 0.5;
  spec.shadow_train_fraction = 0.5;
  try {
    partition_dataset(dataset, spec, 1);
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("proportion validation flags weights that do not sum to one") {
  try {
    PropertyProportion({0.5, 0.6}).validate();
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("sample_with_proportion reports the missing class") {
  SyntheticSpec gen;
  gen.n_samples = 100;
  gen.property_weights = {0.6, 0.4};
  auto pool = generate_synthetic(gen, 1).samples;
  try {
    sample_with_proportion(pool, PropertyProportion({0.9, 0.1}), 100, 2);
    FAIL("expected InsufficientSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSamples);
    CHECK(std::string(e.what()).find("need 90") != std::string::npos);
  }
  // n=7 at (0.5, 0.5) apportions 4/3 by largest remainder.
  auto seven = sample_with_proportion(pool, PropertyProportion({0.5, 0.5}),
                                      7, 2);
  std::size_t zeros = 0;
  for (const auto& s : seven)
    if (s.property == 0) ++zeros;
  CHECK(zeros == 4);
}

TEST_CASE("query demand beyond the pool raises InsufficientSamples") {
  SyntheticSpec gen;
  gen.n_samples = 30;
  auto pool = generate_synthetic(gen, 3).samples;
  try {
    build_query_aux(pool,
                    {PropertyProportion({0.5, 0.5}),
                     PropertyProportion({0.5, 0.5})},
                    20, 4);
    FAIL("expected InsufficientSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSamples);
  }
}

TEST_CASE("same seed reproduces the bundle, different seed does not") {
  auto dataset = tiny_dataset();
  auto a = partition_dataset(dataset, quarter_spec(), 123);
  auto b = partition_dataset(dataset, quarter_spec(), 123);
  auto c = partition_dataset(dataset, quarter_spec(), 124);
  CHECK(sets_equal(a.target_train, b.target_train));
  CHECK(sets_equal(a.partial_aux, b.partial_aux));
  CHECK(sets_equal(a.query_aux[0].second, b.query_aux[0].second));
  CHECK_FALSE(sets_equal(a.target_train, c.target_train));
}

TEST_CASE("bundle round trip through disk") {
  namespace fs = std::filesystem;
  auto dataset = tiny_dataset(400);
  auto spec = quarter_spec();
  spec.query_set_size = 8;
  auto bundle = partition_dataset(dataset, spec, 55);

  fs::path dir = fs::temp_directory_path() / "inferlab_bundle_test";
  fs::remove_all(dir);
  save_bundle(bundle, dir.string());
  auto loaded = load_bundle(dir.string());

  CHECK(sets_equal(bundle.target_train, loaded.target_train));
  CHECK(sets_equal(bundle.target_test, loaded.target_test));
  CHECK(sets_equal(bundle.shadow_train, loaded.shadow_train));
  CHECK(sets_equal(bundle.shadow_test, loaded.shadow_test));
  CHECK(sets_equal(bundle.partial_aux, loaded.partial_aux));
  REQUIRE(loaded.query_aux.size() == bundle.query_aux.size());
  CHECK(sets_equal(bundle.query_aux[1].second, loaded.query_aux[1].second));
  CHECK(loaded.axis == bundle.axis);

  SUBCASE("corrupted tensor file is rejected") {
    std::fstream f(dir / "target_train.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(64);
    char junk = 0x5a;
    f.write(&junk, 1);
    f.close();
    try {
      load_bundle(dir.string());
      FAIL("expected SerializationError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SerializationError);
    }
  }
  fs::remove_all(dir);
}
