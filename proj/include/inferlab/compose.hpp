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

#ifndef INFERLAB_COMPOSE_HPP_
#define INFERLAB_COMPOSE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "inferlab/adversarial.hpp"
#include "inferlab/attrinf.hpp"
#include "inferlab/meminf.hpp"
#include "inferlab/propinf.hpp"

namespace inferlab::compose {

// A composition runs a support attack whose output reshapes one stage of a
// primary attack, then reports the primary attack twice: the origin run
// (support disabled) and the composed run, under otherwise identical seeds
// and data. Three levels describe where the support output lands:
//   preparation - it reshapes the primary attack's training data;
//   execution   - it adds coordinates to the primary attack's features;
//   evaluation  - it recalibrates the primary attack's output scores.
enum class AttackKind { Adv, AttrInf, MemInf, PropInf };
enum class Level { Preparation, Execution, Evaluation };

// How an inferred proportion is applied downstream: weighted by the
// inferring model's confidence (empirical) or taken at face value
// (theoretical).
enum class PropinfMode { Empirical, Theoretical };

std::string kind_name(AttackKind k);
AttackKind kind_from_name(const std::string& name);
std::string level_name(Level level);
Level level_from_name(const std::string& name);
std::string mode_name(PropinfMode mode);
PropinfMode mode_from_name(const std::string& name);

// The supported (support, primary, level) tuples:
//   propinf -> attrinf @ preparation   (empirical or theoretical)
//   adv     -> meminf  @ execution
//   adv     -> propinf @ execution
//   propinf -> meminf  @ evaluation
// `chained` marks the final stage of a three-attack chain, where the
// proportion came from an adversarially augmented inference rather than a
// plain one. validate() throws InvalidAttackConfig for any other tuple.
struct CompositionPlan {
  AttackKind support = AttackKind::PropInf;
  AttackKind primary = AttackKind::AttrInf;
  Level level = Level::Preparation;
  PropinfMode mode = PropinfMode::Empirical;
  bool chained = false;

  void validate() const;
  std::string label() const;  // e.g. "propinf->attrinf@preparation"
};

// Fingerprints of what one attack run consumed, used to check the level
// contracts: a preparation-level composition may differ from its origin only
// in aux_hash, an execution-level one only in feature_schema_hash, and an
// evaluation-level one in neither. attack_config_hash covers the primary
// attack's hyperparameters, aux_hash the identity of its training-side data,
// feature_schema_hash the layout of the features it consumes, eval_hash the
// identity of the evaluation samples.
struct RunManifest {
  std::uint64_t attack_config_hash = 0;
  std::uint64_t aux_hash = 0;
  std::uint64_t feature_schema_hash = 0;
  std::uint64_t eval_hash = 0;

  bool operator==(const RunManifest& other) const = default;
};

struct CompositionOutcome {
  CompositionPlan plan;
  metrics::AttackResult origin;
  metrics::AttackResult composition;
  RunManifest origin_manifest;
  RunManifest composition_manifest;
};

// What a property-inference stage hands downstream: the proportion it
// assigned to the target's training set and the posterior mass behind that
// call.
struct PropinfSummary {
  data::PropertyProportion proportion;
  double confidence = 1.0;
};

PropinfSummary summarize_propinf(const propinf::PropinfOutcome& outcome);

// Per-value subsampling of a pool against an inferred proportion: a value v
// inferred at weight p_v keeps floor(avail_v * r_v) of its stratum, where
// r_v = confidence * (1 - p_v) in empirical mode and 1 - p_v in theoretical
// mode. Values the target over-represents are trimmed hardest, so a pool
// biased the same way as the target comes out balanced. Selection within a
// stratum is a seeded permutation; the result is ordered by sample id.
data::SampleSet resample_by_inferred_proportion(const data::SampleSet& pool,
                                                const PropinfSummary& inferred,
                                                PropinfMode mode,
                                                data::LabelAxis axis,
                                                std::uint64_t seed);

// Preparation level: the inferred attribute proportion of the target's
// training set reshapes the attribute-inference training pool. Origin trains
// on aux_pool as given; the composition trains on the resampled pool; both
// evaluate on eval_set. The proportion must live on the attribute axis.
struct PropinfAttrinfParams {
  attrinf::AttrinfParams attrinf;
  PropinfMode mode = PropinfMode::Empirical;
  std::uint64_t seed = 0;  // drives only the resampling permutations
};

CompositionOutcome propinf_to_attrinf(const model::TrainedModel& target,
                                      const data::SampleSet& aux_pool,
                                      const data::SampleSet& eval_set,
                                      const PropinfSummary& inferred,
                                      const PropinfAttrinfParams& params);

// Execution level: per-sample adversarial distance joins the membership
// features. The probe mode is dictated by the setting: black-box settings
// and the likelihood-ratio setting probe with the query-only search, the
// white-box settings with the gradient search; params.adv.mode is
// overridden accordingly. Classifier settings share one protocol (and so
// one shadow) between origin and composition.
CompositionOutcome adv_to_meminf(const model::TrainedModel& target,
                                 const data::DatasetBundle& bundle,
                                 meminf::ThreatSetting setting,
                                 const meminf::MeminfParams& params);

// Execution level: per-model adversarial distances on the query samples
// widen the property-inference features. Distances are appended after the
// posterior block, one coordinate per query sample in the same sorted
// proportion-then-sample order, for the fleet rows and the target alike.
// With a zero perturbation budget the new columns are exactly zero and the
// zero-initialized meta-classifier reproduces the origin run bitwise.
struct AdvPropinfParams {
  propinf::PropinfParams propinf;
  adversarial::AdvProfileParams adv;
  std::uint64_t seed = 0;  // adversarial probe streams
  int workers = 1;
};

struct AdvPropinfOutcome {
  CompositionOutcome outcome;  // origin/composition hold held-out fleet runs
  propinf::PropinfOutcome origin_run;
  propinf::PropinfOutcome composition_run;
};

AdvPropinfOutcome adv_to_propinf(const model::TrainedModel& target,
                                 const std::vector<model::FleetMember>& fleet,
                                 const propinf::QueryAux& query_aux,
                                 const AdvPropinfParams& params);

// Per-sample record of an evaluation-level recalibration, exposed so the
// level contract stays checkable: composition score = base + shift, where
// for classifier settings shift = lambda * (P(value) - 0.5) with lambda from
// the gate encoder, and for the likelihood-ratio setting shift =
// base * (lambda - 1) with lambda the inferred prior of the sample's value.
struct CalibrationTrace {
  Eigen::VectorXd base;
  Eigen::VectorXd lambda;
  Eigen::VectorXd shift;
};

// Prior adjustment for likelihood-ratio scores: adjusted_i =
// scores_i * prior[property_of_i]. Positive per-value factors preserve the
// ordering within each value class and the sign of every score; a uniform
// prior rescales everything equally and leaves the ranking untouched.
Eigen::VectorXd propinf_to_lira(const Eigen::VectorXd& scores,
                                const std::vector<int>& property_of,
                                const data::PropertyProportion& prior);

// Evaluation level: the inferred proportion of the sample's property value
// recalibrates membership scores. Classifier settings train a gate encoder
// (four dense layers over the unranked posterior vector) jointly with the
// attack model against the cross-entropy of the calibrated score
// base + lambda * (P(value) - 0.5), decided at threshold 0.5; a proportion
// of exactly one half zeroes every calibration term and the joint run
// reproduces the origin attack bitwise. The likelihood-ratio setting instead
// multiplies each stored score by the inferred prior of the sample's value,
// predicting "member" where the adjusted score stays positive.
struct PropinfMeminfOutcome {
  CompositionOutcome outcome;
  CalibrationTrace calibration;
};

PropinfMeminfOutcome propinf_to_meminf(const model::TrainedModel& target,
                                       const data::DatasetBundle& bundle,
                                       meminf::ThreatSetting setting,
                                       const PropinfSummary& inferred,
                                       const meminf::MeminfParams& params);

// Three-attack chains: the adversarially augmented property inference runs
// first and its prediction plus confidence feed the downstream composition.
// The attribute chain applies the forwarded proportion in empirical mode;
// the membership chain calibrates with the forwarded proportion. With a
// zero perturbation budget the forwarded summary equals the plain one and
// each chain degenerates to its two-step composition exactly.
struct ChainAttrinfParams {
  AdvPropinfParams adv_propinf;
  attrinf::AttrinfParams attrinf;
  std::uint64_t seed = 0;  // resampling permutations
};

struct ChainAttrinfOutcome {
  AdvPropinfOutcome propinf_stage;
  PropinfSummary forwarded;
  CompositionOutcome final_stage;
};

ChainAttrinfOutcome chain_adv_propinf_attrinf(
    const model::TrainedModel& target,
    const std::vector<model::FleetMember>& fleet,
    const propinf::QueryAux& query_aux, const data::SampleSet& aux_pool,
    const data::SampleSet& eval_set, const ChainAttrinfParams& params);

struct ChainMeminfParams {
  AdvPropinfParams adv_propinf;
  meminf::MeminfParams meminf;
};

struct ChainMeminfOutcome {
  AdvPropinfOutcome propinf_stage;
  PropinfSummary forwarded;
  PropinfMeminfOutcome final_stage;
};

ChainMeminfOutcome chain_adv_propinf_meminf(
    const model::TrainedModel& target, const data::DatasetBundle& bundle,
    const std::vector<model::FleetMember>& fleet,
    const propinf::QueryAux& query_aux, meminf::ThreatSetting setting,
    const ChainMeminfParams& params);

}  // namespace inferlab::compose

#endif  // INFERLAB_COMPOSE_HPP_
