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

#include "inferlab/meminf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace inferlab::meminf {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kPi = 3.141592653589793238462643383279502884;

AttackFeatureRecord make_record(const model::TrainedModel& m,
                                const data::Sample& s, FeatureSetting setting,
                                int member) {
  AttackFeatureRecord r;
  Vec post = m.posteriors(s.features);
  r.correct = nn::argmax_lowest(post) == s.task_label ? 1.0 : 0.0;
  std::sort(post.data(), post.data() + post.size(),
            [](double a, double b) { return a > b; });
  r.ranked_posteriors = post;
  if (setting == FeatureSetting::Wb) {
    r.loss = m.loss(s.features, s.task_label);
    r.last_layer_gradient = m.last_layer_gradient(s.features, s.task_label);
    r.onehot_label = nn::one_hot(s.task_label, m.meta.num_classes);
  }
  r.member = member;
  return r;
}

// Branch inputs in their fixed order. The layout must match between training
// and scoring, so both go through this one function.
std::vector<Vec> branch_inputs(const AttackFeatureRecord& r,
                               FeatureSetting setting, bool uses_adv) {
  std::vector<Vec> inputs;
  inputs.push_back(r.ranked_posteriors);
  inputs.push_back(Vec::Constant(1, r.correct));
  if (setting == FeatureSetting::Wb) {
    if (!r.loss || !r.last_layer_gradient || !r.onehot_label)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "white-box record is missing loss/gradient/label fields");
    inputs.push_back(Vec::Constant(1, *r.loss));
    inputs.push_back(*r.last_layer_gradient);
    inputs.push_back(*r.onehot_label);
  }
  if (uses_adv) {
    if (!r.adv_l2)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "record lacks the adversarial distance the model expects");
    inputs.push_back(Vec::Constant(1, *r.adv_l2));
  }
  return inputs;
}

Vec concat(const std::vector<Vec>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vec out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

std::vector<Vec> split(const Vec& flat, const std::vector<int>& dims) {
  std::vector<Vec> parts;
  Eigen::Index at = 0;
  for (int d : dims) {
    parts.push_back(flat.segment(at, d));
    at += d;
  }
  return parts;
}

double log_mvn_density(const Vec& x, const Vec& mean, const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::Internal,
                "regularized covariance failed to factor");
  const Vec d = x - mean;
  const double quad = d.dot(llt.solve(d));
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(d.size()) * std::log(2.0 * kPi) +
                 logdet + quad);
}

// Sample mean and (n-1)-normalized covariance with the fixed ridge.
void fit_gaussian(const Mat& rows, Vec& mean, Mat& cov) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  mean = rows.colwise().mean();
  Mat centered = rows.rowwise() - mean.transpose();
  cov = centered.transpose() * centered / static_cast<double>(n - 1);
  cov += 1e-6 * Mat::Identity(d, d);
}

data::SampleSet remove_ids(const data::SampleSet& pool,
                           const std::set<std::uint64_t>& drop) {
  data::SampleSet kept;
  for (const auto& s : pool)
    if (!drop.count(s.id)) kept.push_back(s);
  return kept;
}

std::optional<Eigen::VectorXd> maybe_profile(
    const model::TrainedModel& m, const data::SampleSet& samples,
    bool adv_augment, const MeminfParams& params, const char* stream) {
  if (!adv_augment) return std::nullopt;
  adversarial::AdvProfileParams p = params.adv;
  p.workers = params.workers;
  p.seed = derive_seed(params.seed, stream);
  return adversarial::adv_l2_profile(m, samples, p);
}

// Distances from different models live on different scales, so a profile
// pair taken from one model is recentred on its joint median and rescaled
// by its median absolute deviation before it joins the feature records.
// A degenerate pair (an exhausted or zero budget) stays raw.
void normalize_adv_scale(std::optional<Eigen::VectorXd>& members,
                         std::optional<Eigen::VectorXd>& nonmembers) {
  if (!members || !nonmembers) return;
  std::vector<double> all(members->data(), members->data() + members->size());
  all.insert(all.end(), nonmembers->data(),
             nonmembers->data() + nonmembers->size());
  if (all.empty()) return;
  const std::size_t mid = all.size() / 2;
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid),
                   all.end());
  const double center = all[mid];
  for (double& v : all) v = std::abs(v - center);
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid),
                   all.end());
  const double scale = all[mid];
  if (scale <= 1e-12) return;
  *members = (members->array() - center) / scale;
  *nonmembers = (nonmembers->array() - center) / scale;
}

}  // namespace

std::string setting_name(ThreatSetting setting) {
  switch (setting) {
    case ThreatSetting::BbShadow: return "bb_shadow";
    case ThreatSetting::BbPartial: return "bb_partial";
    case ThreatSetting::WbShadow: return "wb_shadow";
    case ThreatSetting::WbPartial: return "wb_partial";
    case ThreatSetting::Lira: return "lira";
  }
  throw Error(ErrorCode::Internal, "unreachable setting");
}

ThreatSetting setting_from_name(const std::string& name) {
  if (name == "bb_shadow") return ThreatSetting::BbShadow;
  if (name == "bb_partial") return ThreatSetting::BbPartial;
  if (name == "wb_shadow") return ThreatSetting::WbShadow;
  if (name == "wb_partial") return ThreatSetting::WbPartial;
  if (name == "lira") return ThreatSetting::Lira;
  throw Error(ErrorCode::InvalidAttackConfig,
              "unknown membership setting '" + name + "'");
}

std::vector<AttackFeatureRecord> build_meminf_features(
    const model::TrainedModel& m, const data::SampleSet& members,
    const data::SampleSet& nonmembers, FeatureSetting setting,
    const std::optional<Eigen::VectorXd>& member_adv_l2,
    const std::optional<Eigen::VectorXd>& nonmember_adv_l2) {
  if (!data::disjoint_ids(members, nonmembers))
    throw Error(ErrorCode::DisjointnessViolation,
                "members and nonmembers overlap");
  if (member_adv_l2.has_value() != nonmember_adv_l2.has_value())
    throw Error(ErrorCode::InvalidAttackConfig,
                "adversarial distances must cover both sides or neither");
  if (member_adv_l2 &&
      (member_adv_l2->size() != static_cast<Eigen::Index>(members.size()) ||
       nonmember_adv_l2->size() !=
           static_cast<Eigen::Index>(nonmembers.size())))
    throw Error(ErrorCode::InvalidAttackConfig,
                "adversarial distance vectors misaligned with sample sets");

  std::vector<AttackFeatureRecord> records;
  records.reserve(members.size() + nonmembers.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto r = make_record(m, members[i], setting, 1);
    if (member_adv_l2) r.adv_l2 = (*member_adv_l2)[i];
    records.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < nonmembers.size(); ++i) {
    auto r = make_record(m, nonmembers[i], setting, 0);
    if (nonmember_adv_l2) r.adv_l2 = (*nonmember_adv_l2)[i];
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<Eigen::VectorXd> MeminfAttackModel::standardized_inputs(
    const AttackFeatureRecord& record) const {
  Vec flat = concat(branch_inputs(record, setting, uses_adv));
  if (flat.size() != feature_mean.size())
    throw Error(ErrorCode::InvalidAttackConfig,
                "record dimensions do not match the trained attack model");
  flat = (flat - feature_mean).cwiseQuotient(feature_scale);
  return split(flat, branch_dims);
}

double MeminfAttackModel::score(const AttackFeatureRecord& record) const {
  return nn::sigmoid(net.forward(standardized_inputs(record))[0]);
}

MeminfAttackModel init_meminf_attack_model(
    const std::vector<AttackFeatureRecord>& records, FeatureSetting setting,
    std::uint64_t seed) {
  if (records.empty())
    throw Error(ErrorCode::InvalidAttackConfig, "no attack training records");
  bool any_member = false, any_nonmember = false;
  std::size_t with_adv = 0;
  for (const auto& r : records) {
    if (!r.member)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "attack training records need member labels");
    (*r.member ? any_member : any_nonmember) = true;
    if (r.adv_l2) ++with_adv;
  }
  if (!any_member || !any_nonmember)
    throw Error(ErrorCode::DegenerateLabels,
                "attack training records hold a single class");
  if (with_adv != 0 && with_adv != records.size())
    throw Error(ErrorCode::InvalidAttackConfig,
                "adversarial distances present on only part of the records");

  MeminfAttackModel out;
  out.setting = setting;
  out.uses_adv = with_adv == records.size();

  // Assemble the raw design matrix and freeze the z-score statistics.
  std::vector<std::vector<Vec>> raw;
  raw.reserve(records.size());
  for (const auto& r : records)
    raw.push_back(branch_inputs(r, setting, out.uses_adv));
  for (const auto& part : raw.front())
    out.branch_dims.push_back(static_cast<int>(part.size()));

  const Eigen::Index dim = concat(raw.front()).size();
  Mat design(records.size(), dim);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Vec flat = concat(raw[i]);
    if (flat.size() != dim)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "inconsistent feature dimensions across records");
    design.row(static_cast<Eigen::Index>(i)) = flat;
  }
  out.feature_mean = design.colwise().mean();
  Vec var = (design.rowwise() - out.feature_mean.transpose())
                .array()
                .square()
                .colwise()
                .mean();
  out.feature_scale = var.array().sqrt().max(1e-8);

  // Branch encoders: dense(d, 32) relu dense(32, 16) relu. Head: four dense
  // layers down to one logit.
  Rng init(derive_seed(seed, "init"));
  for (int d : out.branch_dims) {
    nn::Network b;
    b.add_dense(d, 32);
    b.add_relu(32);
    b.add_dense(32, 16);
    b.add_relu(16);
    b.finalize(init);
    out.net.branches.push_back(std::move(b));
  }
  nn::Network head;
  head.add_dense(16 * static_cast<int>(out.branch_dims.size()), 64);
  head.add_relu(64);
  head.add_dense(64, 32);
  head.add_relu(32);
  head.add_dense(32, 16);
  head.add_relu(16);
  head.add_dense(16, 1);
  head.finalize(init);
  out.net.head = std::move(head);
  out.net.finalize_check();
  return out;
}

MeminfAttackModel train_meminf_attack_model(
    const std::vector<AttackFeatureRecord>& records, FeatureSetting setting,
    std::uint64_t seed, int epochs, double lr, int batch) {
  if (epochs < 1 || batch < 1 || !(lr > 0.0))
    throw Error(ErrorCode::InvalidAttackConfig,
                "attack training hyperparameters out of range");
  MeminfAttackModel out = init_meminf_attack_model(records, setting, seed);

  // Standardized per-record branch inputs, fixed for all epochs.
  std::vector<std::vector<Vec>> inputs;
  std::vector<double> labels;
  inputs.reserve(records.size());
  for (const auto& r : records) {
    inputs.push_back(out.standardized_inputs(r));
    labels.push_back(static_cast<double>(*r.member));
  }

  Vec params = out.net.flat_params();
  Vec grad(params.size());
  nn::Adam adam(static_cast<std::size_t>(params.size()), lr);
  Rng shuffle(derive_seed(seed, "shuffle"));
  std::vector<std::vector<Vec>> branch_acts;
  std::vector<Vec> head_acts;

  const std::size_t n = inputs.size();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    auto order = shuffle.permutation(n);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(batch));
      grad.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        Vec logit = out.net.forward(inputs[i], branch_acts, head_acts);
        const double p = nn::sigmoid(logit[0]);
        Vec g(1);
        g[0] = p - labels[i];  // BCE gradient through the sigmoid
        out.net.backward(branch_acts, head_acts, g, grad);
      }
      grad /= static_cast<double>(stop - start);
      adam.step(params, grad);
      out.net.set_flat_params(params);
    }
  }
  if (!params.allFinite())
    throw Error(ErrorCode::DivergedTraining,
                "attack model parameters are not finite");
  return out;
}

void balanced_eval_split(const data::SampleSet& member_pool,
                         const data::SampleSet& nonmember_pool,
                         std::size_t cap, data::SampleSet& members,
                         data::SampleSet& nonmembers) {
  const std::size_t n =
      std::min({member_pool.size(), nonmember_pool.size(), cap});
  if (n == 0)
    throw Error(ErrorCode::InsufficientSamples,
                "empty pool for balanced evaluation");
  members.assign(member_pool.begin(), member_pool.begin() + n);
  nonmembers.assign(nonmember_pool.begin(), nonmember_pool.begin() + n);
}

double lira_confidence(const model::TrainedModel& m, const data::Sample& s) {
  const double p = m.posteriors(s.features)[s.task_label];
  return std::clamp(std::log(p / (1.0 - p)), -20.0, 20.0);
}

double lira_pair_log_ratio(const Eigen::VectorXd& obs,
                           const Eigen::MatrixXd& in_rows,
                           const Eigen::MatrixXd& out_rows) {
  if (in_rows.rows() < 2 || out_rows.rows() < 2)
    throw Error(ErrorCode::InvalidAttackConfig,
                "need at least two in- and two out-observations");
  if (in_rows.cols() != obs.size() || out_rows.cols() != obs.size())
    throw Error(ErrorCode::InvalidAttackConfig,
                "observation dimension mismatch");
  Vec mean_in, mean_out;
  Mat cov_in, cov_out;
  fit_gaussian(in_rows, mean_in, cov_in);
  fit_gaussian(out_rows, mean_out, cov_out);
  return -log_mvn_density(obs, mean_in, cov_in) +
         log_mvn_density(obs, mean_out, cov_out);
}

LiraFleet build_lira_fleet(const data::SampleSet& candidates,
                           const data::SampleSet& monitor_test,
                           const model::ModelConfig& config,
                           const data::DatasetMeta& meta, int fleet_size,
                           std::uint64_t seed, int workers) {
  if (fleet_size < 4 || fleet_size % 2 != 0)
    throw Error(ErrorCode::InvalidAttackConfig,
                "fleet size must be even and at least 4");
  if (candidates.size() < 2)
    throw Error(ErrorCode::InsufficientSamples,
                "need at least two candidates");

  LiraFleet fleet;
  fleet.in_matrix.assign(candidates.size(),
                         std::vector<char>(fleet_size, 0));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Rng rng(derive_seed(seed, "assign", i));
    auto perm = rng.permutation(static_cast<std::size_t>(fleet_size));
    for (int k = 0; k < fleet_size / 2; ++k) fleet.in_matrix[i][perm[k]] = 1;
  }

  std::vector<data::SampleSet> train_sets(fleet_size);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (int j = 0; j < fleet_size; ++j)
      if (fleet.in_matrix[i][j]) train_sets[j].push_back(candidates[i]);

  fleet.shadows.resize(fleet_size);
  model::parallel_for(
      static_cast<std::size_t>(fleet_size), workers, [&](std::size_t j) {
        fleet.shadows[j] =
            model::train_model(train_sets[j], monitor_test, config, meta,
                               derive_seed(seed, "shadow", j));
      });
  return fleet;
}

metrics::AttackResult lira_attack(
    const model::TrainedModel& target,
    const std::vector<model::TrainedModel>& shadows,
    const std::vector<std::vector<char>>& in_matrix,
    const data::SampleSet& eval_samples, const std::vector<int>& ground_truth,
    const std::optional<LiraAux>& aux) {
  const std::size_t n = eval_samples.size();
  if (in_matrix.size() != n || ground_truth.size() != n)
    throw Error(ErrorCode::InvalidAttackConfig,
                "candidate bookkeeping misaligned with eval samples");
  if (aux && (aux->shadow_scores.rows() != static_cast<Eigen::Index>(n) ||
              aux->shadow_scores.cols() !=
                  static_cast<Eigen::Index>(shadows.size()) ||
              aux->target_scores.size() != static_cast<Eigen::Index>(n)))
    throw Error(ErrorCode::InvalidAttackConfig,
                "auxiliary score shapes misaligned");

  const int dims = aux ? 2 : 1;
  metrics::AttackResult result;
  for (std::size_t i = 0; i < n; ++i) {
    int n_in = 0;
    for (char b : in_matrix[i]) n_in += b;
    const int n_out = static_cast<int>(shadows.size()) - n_in;
    if (n_in < 2 || n_out < 2)
      throw Error(ErrorCode::InvalidAttackConfig,
                  "each candidate needs >= 2 in- and out-models");

    Mat in_rows(n_in, dims), out_rows(n_out, dims);
    int at_in = 0, at_out = 0;
    for (std::size_t j = 0; j < shadows.size(); ++j) {
      Vec row(dims);
      row[0] = lira_confidence(shadows[j], eval_samples[i]);
      if (aux) row[1] = aux->shadow_scores(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j));
      if (in_matrix[i][j])
        in_rows.row(at_in++) = row;
      else
        out_rows.row(at_out++) = row;
    }
    Vec obs(dims);
    obs[0] = lira_confidence(target, eval_samples[i]);
    if (aux) obs[1] = aux->target_scores[static_cast<Eigen::Index>(i)];

    const double raw = lira_pair_log_ratio(obs, in_rows, out_rows);
    result.scores.push_back(-raw);  // orient so higher favors "member"
    result.predictions.push_back(raw < 0.0 ? 1 : 0);
    result.ground_truth.push_back(ground_truth[i]);
  }
  metrics::fill_binary_metrics(result);
  return result;
}

MeminfProtocol build_meminf_protocol(const model::TrainedModel& target,
                                     const data::DatasetBundle& bundle,
                                     ThreatSetting setting,
                                     const MeminfParams& params) {
  if (setting == ThreatSetting::Lira)
    throw Error(ErrorCode::InvalidAttackConfig,
                "the likelihood-ratio setting has no classifier protocol");
  if (bundle.target_train.empty() || bundle.target_test.empty())
    throw Error(ErrorCode::MissingUpstream,
                "bundle lacks target partitions");

  MeminfProtocol proto;
  proto.feature_setting = (setting == ThreatSetting::WbShadow ||
                           setting == ThreatSetting::WbPartial)
                              ? FeatureSetting::Wb
                              : FeatureSetting::Bb;

  if (setting == ThreatSetting::BbShadow ||
      setting == ThreatSetting::WbShadow) {
    if (bundle.shadow_train.empty() || bundle.shadow_test.empty())
      throw Error(ErrorCode::MissingUpstream,
                  "setting needs shadow partitions");
    const model::ModelConfig shadow_cfg =
        params.shadow_config.value_or(target.config);
    proto.shadow = model::train_model(
        bundle.shadow_train, bundle.shadow_test, shadow_cfg, bundle.meta,
        derive_seed(params.seed, "shadow_model"));
    balanced_eval_split(bundle.shadow_train, bundle.shadow_test,
                        std::numeric_limits<std::size_t>::max(),
                        proto.atk_members, proto.atk_nonmembers);
    balanced_eval_split(bundle.target_train, bundle.target_test,
                        params.max_eval_per_side, proto.eval_members,
                        proto.eval_nonmembers);
    return proto;
  }

  if (bundle.partial_aux.empty())
    throw Error(ErrorCode::MissingUpstream,
                "setting needs the partial training subset");
  const std::size_t k = bundle.partial_aux.size();
  if (bundle.target_test.size() <= k || bundle.target_train.size() <= k)
    throw Error(ErrorCode::InsufficientSamples,
                "partial subset leaves no held-out evaluation data");

  // The back of target_test feeds attack training; the front, along with
  // the unexposed remainder of target_train, is evaluation-only.
  proto.atk_members = bundle.partial_aux;
  proto.atk_nonmembers.assign(
      bundle.target_test.end() - static_cast<std::ptrdiff_t>(k),
      bundle.target_test.end());
  std::set<std::uint64_t> exposed;
  for (const auto& s : proto.atk_members) exposed.insert(s.id);
  data::SampleSet member_pool = remove_ids(bundle.target_train, exposed);
  data::SampleSet nonmember_pool(
      bundle.target_test.begin(),
      bundle.target_test.end() - static_cast<std::ptrdiff_t>(k));
  balanced_eval_split(member_pool, nonmember_pool, params.max_eval_per_side,
                      proto.eval_members, proto.eval_nonmembers);
  return proto;
}

metrics::AttackResult meminf_attack_with_protocol(
    const model::TrainedModel& target, const MeminfProtocol& protocol,
    bool adv_augment, const MeminfParams& params) {
  data::SampleSet atk_all = protocol.atk_members;
  atk_all.insert(atk_all.end(), protocol.atk_nonmembers.begin(),
                 protocol.atk_nonmembers.end());
  data::SampleSet eval_all = protocol.eval_members;
  eval_all.insert(eval_all.end(), protocol.eval_nonmembers.begin(),
                  protocol.eval_nonmembers.end());
  if (!data::disjoint_ids(atk_all, eval_all))
    throw Error(ErrorCode::ContractViolation,
                "evaluation samples overlap attack-training samples");

  const model::TrainedModel& query_model =
      protocol.shadow ? *protocol.shadow : target;
  const FeatureSetting fs = protocol.feature_setting;
  auto atk_mem_adv = maybe_profile(query_model, protocol.atk_members,
                                   adv_augment, params, "adv/train_members");
  auto atk_non_adv =
      maybe_profile(query_model, protocol.atk_nonmembers, adv_augment, params,
                    "adv/train_nonmembers");
  normalize_adv_scale(atk_mem_adv, atk_non_adv);
  auto train_records =
      build_meminf_features(query_model, protocol.atk_members,
                            protocol.atk_nonmembers, fs, atk_mem_adv,
                            atk_non_adv);
  MeminfAttackModel attack = train_meminf_attack_model(
      train_records, fs, derive_seed(params.seed, "attack_model"),
      params.attack_epochs, params.attack_lr, params.attack_batch);

  auto eval_mem_adv = maybe_profile(target, protocol.eval_members, adv_augment,
                                    params, "adv/eval_members");
  auto eval_non_adv = maybe_profile(target, protocol.eval_nonmembers,
                                    adv_augment, params, "adv/eval_nonmembers");
  normalize_adv_scale(eval_mem_adv, eval_non_adv);
  auto eval_records =
      build_meminf_features(target, protocol.eval_members,
                            protocol.eval_nonmembers, fs, eval_mem_adv,
                            eval_non_adv);

  metrics::AttackResult result;
  for (const auto& r : eval_records) {
    const double s = attack.score(r);
    result.scores.push_back(s);
    result.predictions.push_back(s >= 0.5 ? 1 : 0);
    result.ground_truth.push_back(*r.member);
  }
  metrics::fill_binary_metrics(result);
  return result;
}

metrics::AttackResult meminf_attack(const model::TrainedModel& target,
                                    const data::DatasetBundle& bundle,
                                    ThreatSetting setting, bool adv_augment,
                                    const MeminfParams& params) {
  if (setting != ThreatSetting::Lira) {
    MeminfProtocol proto =
        build_meminf_protocol(target, bundle, setting, params);
    return meminf_attack_with_protocol(target, proto, adv_augment, params);
  }
  if (bundle.target_train.empty() || bundle.target_test.empty())
    throw Error(ErrorCode::MissingUpstream,
                "bundle lacks target partitions");

  // Likelihood-ratio setting: per-candidate in/out fleets over the balanced
  // evaluation set itself.
  if (bundle.shadow_test.empty())
    throw Error(ErrorCode::MissingUpstream,
                "setting needs a held-out monitor partition");
  data::SampleSet eval_mem, eval_non;
  balanced_eval_split(bundle.target_train, bundle.target_test,
                      params.max_eval_per_side, eval_mem, eval_non);
  data::SampleSet candidates = eval_mem;
  candidates.insert(candidates.end(), eval_non.begin(), eval_non.end());
  std::vector<int> truth(eval_mem.size(), 1);
  truth.insert(truth.end(), eval_non.size(), 0);

  const model::ModelConfig shadow_cfg =
      params.shadow_config.value_or(target.config);
  LiraFleet fleet = build_lira_fleet(
      candidates, bundle.shadow_test, shadow_cfg, bundle.meta,
      params.lira_fleet_size, derive_seed(params.seed, "lira"),
      params.workers);

  std::optional<LiraAux> aux;
  if (adv_augment) {
    LiraAux a;
    a.shadow_scores.resize(candidates.size(), fleet.shadows.size());
    for (std::size_t j = 0; j < fleet.shadows.size(); ++j) {
      auto prof = maybe_profile(fleet.shadows[j], candidates, true, params,
                                ("adv/shadow/" + std::to_string(j)).c_str());
      a.shadow_scores.col(static_cast<Eigen::Index>(j)) = *prof;
    }
    a.target_scores =
        *maybe_profile(target, candidates, true, params, "adv/target");
    aux = std::move(a);
  }
  return lira_attack(target, fleet.shadows, fleet.in_matrix, candidates,
                     truth, aux);
}

}  // namespace inferlab::meminf
