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

#ifndef INFERLAB_MEMINF_HPP_
#define INFERLAB_MEMINF_HPP_

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "inferlab/adversarial.hpp"
#include "inferlab/metrics.hpp"
#include "inferlab/model.hpp"

namespace inferlab::meminf {

// Threat settings: classifier attacks in black-box or white-box feature mode,
// each with either a shadow model or partial knowledge of the training set,
// plus the per-sample likelihood-ratio attack.
enum class ThreatSetting { BbShadow, BbPartial, WbShadow, WbPartial, Lira };
enum class FeatureSetting { Bb, Wb };

std::string setting_name(ThreatSetting setting);
ThreatSetting setting_from_name(const std::string& name);

// One sample's view of a model, as the attack classifier consumes it. Which
// optional fields are present is dictated by the feature setting; adv_l2 is
// present only when the adversarial-distance augmentation is active.
struct AttackFeatureRecord {
  Eigen::VectorXd ranked_posteriors;  // non-increasing
  double correct = 0.0;               // 1 iff argmax == task label
  std::optional<double> loss;
  std::optional<Eigen::VectorXd> last_layer_gradient;
  std::optional<Eigen::VectorXd> onehot_label;
  std::optional<double> adv_l2;
  std::optional<int> member;  // ground truth when known
};

// Branch-structured binary classifier over feature records. Inputs are
// z-scored with the statistics of the training records.
struct MeminfAttackModel {
  FeatureSetting setting = FeatureSetting::Bb;
  bool uses_adv = false;
  std::vector<int> branch_dims;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  nn::MultiBranchNet net;

  // The record's branch inputs after the frozen z-score transform, in the
  // exact layout the network was built for.
  std::vector<Eigen::VectorXd> standardized_inputs(
      const AttackFeatureRecord& record) const;
  // Membership score in [0, 1]; higher favors "member".
  double score(const AttackFeatureRecord& record) const;
};

struct MeminfParams {
  int attack_epochs = 50;     // cited defaults; desk configs raise the rate
  double attack_lr = 1e-5;
  int attack_batch = 64;
  int lira_fleet_size = 16;   // even, >= 4
  // Shadow models copy the target's training configuration unless overridden.
  std::optional<model::ModelConfig> shadow_config;
  adversarial::AdvProfileParams adv;  // used when adv_augment is set
  std::size_t max_eval_per_side = std::numeric_limits<std::size_t>::max();
  std::uint64_t seed = 0;
  int workers = 1;
};

// Queries the model on members and non-members and assembles labeled records.
// Adversarial distances, when given, must align index-for-index with the
// sample sets.
std::vector<AttackFeatureRecord> build_meminf_features(
    const model::TrainedModel& m, const data::SampleSet& members,
    const data::SampleSet& nonmembers, FeatureSetting setting,
    const std::optional<Eigen::VectorXd>& member_adv_l2 = std::nullopt,
    const std::optional<Eigen::VectorXd>& nonmember_adv_l2 = std::nullopt);

// Validated, freshly initialized, untrained attack model for the given
// records: branch layout, frozen z-score statistics, and weights drawn from
// the model-init stream of `seed`. Exposed so joint training schemes can
// extend the optimization without re-deriving the layout.
MeminfAttackModel init_meminf_attack_model(
    const std::vector<AttackFeatureRecord>& records, FeatureSetting setting,
    std::uint64_t seed);

// Two branch encoders in black-box mode (ranked posteriors; correctness),
// five in white-box mode (plus loss, last-layer gradient, one-hot label), an
// extra branch when records carry adversarial distances; all fused by a
// four-layer head ending in a sigmoid score.
MeminfAttackModel train_meminf_attack_model(
    const std::vector<AttackFeatureRecord>& records, FeatureSetting setting,
    std::uint64_t seed, int epochs = 50, double lr = 1e-5, int batch = 64);

// The sample pools a classifier-mode attack runs on: who answers the
// attack-training queries (the shadow when present, otherwise the target)
// and which samples feed training versus held-out evaluation.
struct MeminfProtocol {
  FeatureSetting feature_setting = FeatureSetting::Bb;
  std::optional<model::TrainedModel> shadow;
  data::SampleSet atk_members;
  data::SampleSet atk_nonmembers;
  data::SampleSet eval_members;
  data::SampleSet eval_nonmembers;
};

// Assembles the protocol a classifier setting prescribes, training the
// shadow model when the setting calls for one. The likelihood-ratio setting
// has no classifier protocol and is rejected.
MeminfProtocol build_meminf_protocol(const model::TrainedModel& target,
                                     const data::DatasetBundle& bundle,
                                     ThreatSetting setting,
                                     const MeminfParams& params);

// Runs the classifier attack on an already-assembled protocol: builds
// features, trains the attack model, scores the held-out evaluation pools.
metrics::AttackResult meminf_attack_with_protocol(
    const model::TrainedModel& target, const MeminfProtocol& protocol,
    bool adv_augment, const MeminfParams& params);

// Full protocol for one target model and one dataset bundle: builds the
// attack-training and evaluation sets the chosen setting prescribes, trains
// whatever auxiliary models it needs, and reports balanced-eval metrics.
// Evaluation samples are always disjoint from attack-training samples.
metrics::AttackResult meminf_attack(const model::TrainedModel& target,
                                    const data::DatasetBundle& bundle,
                                    ThreatSetting setting, bool adv_augment,
                                    const MeminfParams& params);

// Optional per-sample auxiliary coordinate for the likelihood-ratio attack
// (the adversarial distance): one value per shadow model for the fits, one
// value against the target for the observation.
struct LiraAux {
  Eigen::MatrixXd shadow_scores;  // [candidate][shadow]
  Eigen::VectorXd target_scores;  // [candidate]
};

// Log-likelihood ratio of one observation under Gaussians fitted to in/out
// rows: -log N(obs; in) + log N(obs; out). Negative favors "in". Covariances
// get + 1e-6 I so near-singular fits stay invertible.
double lira_pair_log_ratio(const Eigen::VectorXd& obs,
                           const Eigen::MatrixXd& in_rows,
                           const Eigen::MatrixXd& out_rows);

// Logit of the true-class posterior, clamped to [-20, 20].
double lira_confidence(const model::TrainedModel& m, const data::Sample& s);

// Per-candidate Gaussian likelihood-ratio attack. in_matrix[i][j] says
// whether candidate i was in shadow j's training set; every candidate needs
// at least two in- and two out-models. Scores in the result are oriented so
// higher favors "member" (the negated log ratio).
metrics::AttackResult lira_attack(
    const model::TrainedModel& target,
    const std::vector<model::TrainedModel>& shadows,
    const std::vector<std::vector<char>>& in_matrix,
    const data::SampleSet& eval_samples, const std::vector<int>& ground_truth,
    const std::optional<LiraAux>& aux = std::nullopt);

// The balanced per-candidate shadow design used by the LiRA setting: each
// candidate lands in exactly fleet_size/2 training sets. Exposed so
// compositions can reuse the same fleets.
struct LiraFleet {
  std::vector<model::TrainedModel> shadows;
  std::vector<std::vector<char>> in_matrix;  // [candidate][shadow]
};

LiraFleet build_lira_fleet(const data::SampleSet& candidates,
                           const data::SampleSet& monitor_test,
                           const model::ModelConfig& config,
                           const data::DatasetMeta& meta, int fleet_size,
                           std::uint64_t seed, int workers);

// Balanced evaluation split shared by every setting: the first n id-ordered
// samples of each pool, n = min(pool sizes, cap).
void balanced_eval_split(const data::SampleSet& member_pool,
                         const data::SampleSet& nonmember_pool,
                         std::size_t cap, data::SampleSet& members,
                         data::SampleSet& nonmembers);

}  // namespace inferlab::meminf

#endif  // INFERLAB_MEMINF_HPP_
