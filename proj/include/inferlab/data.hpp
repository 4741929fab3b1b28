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

#ifndef INFERLAB_DATA_HPP
#define INFERLAB_DATA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "inferlab/common.hpp"

namespace inferlab::data {

// Distribution over the values of a categorical label axis.
struct PropertyProportion {
  std::vector<double> weights;

  PropertyProportion() = default;
  explicit PropertyProportion(std::vector<double> w) : weights(std::move(w)) {}

  void validate(std::size_t num_values = 0) const;
  bool uniform(double tol = 1e-9) const;
  std::string label() const;  // stable text form, e.g. "0.2:0.8"
  bool operator==(const PropertyProportion& other) const {
    return weights == other.weights;
  }
};

struct Sample {
  std::uint64_t id = 0;
  Eigen::VectorXd features;  // flattened single-channel grid, values in [0,1]
  int task_label = 0;
  int attribute = 0;
  int property = 0;
};

using SampleSet = std::vector<Sample>;

// Which categorical axis a proportion refers to. Property inference can run
// on either the property axis or, when it supports attribute inference, the
// attribute axis.
enum class LabelAxis { Property, Attribute };

int axis_value(const Sample& s, LabelAxis axis);
const char* axis_name(LabelAxis axis);
LabelAxis axis_from_name(const std::string& name);

struct DatasetMeta {
  int height = 8;
  int width = 8;
  int num_classes = 4;
  int num_attribute_values = 2;
  int num_property_values = 2;

  int feature_dim() const { return height * width; }
  int axis_values(LabelAxis axis) const {
    return axis == LabelAxis::Property ? num_property_values
                                       : num_attribute_values;
  }
};

struct Dataset {
  DatasetMeta meta;
  SampleSet samples;
};

// Synthetic image-like data with separable planted patterns: a task pattern
// per class, an attribute pattern, and a property pattern, each in its own
// region of the grid. The coupling knobs let the attribute or property value
// perturb the task pattern, so that training-set composition leaves a trace
// in the model itself rather than only in the inputs.
struct SyntheticSpec {
  std::size_t n_samples = 4000;
  DatasetMeta meta;
  double task_signal = 1.0;
  double attribute_signal = 0.8;
  double property_signal = 0.8;
  double attribute_task_coupling = 0.0;
  double property_task_coupling = 0.0;
  double noise = 0.3;
  std::vector<double> attribute_weights;  // default uniform
  std::vector<double> property_weights;   // default uniform
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Draws n samples from the pool so the label-axis distribution matches the
// proportion. Counts come from largest-remainder rounding; selection within
// a value is a seeded permutation; output is ordered by sample id.
SampleSet sample_with_proportion(const SampleSet& pool,
                                 const PropertyProportion& proportion,
                                 std::size_t n, std::uint64_t seed,
                                 LabelAxis axis = LabelAxis::Property);

// One sample set per requested proportion, mutually disjoint in pool indices.
std::vector<std::pair<PropertyProportion, SampleSet>> build_query_aux(
    const SampleSet& pool, const std::vector<PropertyProportion>& proportions,
    std::size_t n_per_set, std::uint64_t seed,
    LabelAxis axis = LabelAxis::Property);

struct PartitionSpec {
  double target_train_fraction = 0.25;
  double target_test_fraction = 0.25;
  double shadow_train_fraction = 0.25;
  double shadow_test_fraction = 0.25;
  PropertyProportion target_train_proportion;
  PropertyProportion shadow_train_proportion;
  LabelAxis axis = LabelAxis::Property;
  double partial_fraction = 0.5;    // share of target_train exposed as aux
  bool partial_per_class = false;   // balance partial_aux across task labels
  std::vector<PropertyProportion> query_proportions;
  std::size_t query_set_size = 16;
};

struct DatasetBundle {
  DatasetMeta meta;
  LabelAxis axis = LabelAxis::Property;
  std::uint64_t seed = 0;
  SampleSet target_train;
  SampleSet target_test;
  SampleSet shadow_train;
  SampleSet shadow_test;
  SampleSet partial_aux;  // subset of target_train
  std::vector<std::pair<PropertyProportion, SampleSet>> query_aux;
};

// Splits the dataset into the four disjoint partitions (target/shadow x
// train/test), draws the trainer-side proportions on the configured axis,
// balances the test partitions across that axis, and carves the partial and
// query auxiliary sets.
DatasetBundle partition_dataset(const Dataset& dataset,
                                const PartitionSpec& spec,
                                std::uint64_t seed);

void save_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_bundle(const std::string& dir);

PropertyProportion empirical_proportion(const SampleSet& set, LabelAxis axis,
                                        int num_values);

std::vector<std::uint64_t> ids_of(const SampleSet& set);
bool disjoint_ids(const SampleSet& a, const SampleSet& b);

}  // namespace inferlab::data

#endif  // INFERLAB_DATA_HPP
