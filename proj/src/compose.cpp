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

#include "inferlab/compose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>

namespace inferlab::compose {

using nn::Mat;
using nn::Vec;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t tok(std::uint64_t h, const std::string& t) {
  h = fnv1a64(t, h);
  return fnv1a64("|", 1, h);  // field separator
}

std::uint64_t ids_tok(std::uint64_t h, const data::SampleSet& set) {
  h = tok(h, "n=" + std::to_string(set.size()));
  for (const auto& s : set) h = fnv1a64(&s.id, sizeof s.id, h);
  return h;
}

constexpr std::uint64_t kSeed = 0xcbf29ce484222325ull;

RunManifest attrinf_manifest(const model::TrainedModel& target,
                             const data::SampleSet& aux,
                             const data::SampleSet& eval_set,
                             const attrinf::AttrinfParams& p) {
  RunManifest m;
  std::uint64_t h = tok(kSeed, "attrinf");
  h = tok(h, std::to_string(p.epochs));
  h = tok(h, num(p.learning_rate));
  h = tok(h, std::to_string(p.batch_size));
  h = tok(h, std::to_string(p.hidden));
  h = tok(h, std::to_string(p.seed));
  m.attack_config_hash = h;
  m.aux_hash = ids_tok(tok(kSeed, "attrinf_aux"), aux);
  h = tok(kSeed, "embedding");
  h = tok(h, std::to_string(target.embedding_dim()));
  h = tok(h, std::to_string(target.meta.num_attribute_values));
  m.feature_schema_hash = h;
  m.eval_hash = ids_tok(tok(kSeed, "attrinf_eval"), eval_set);
  return m;
}

RunManifest meminf_manifest(const model::TrainedModel& target,
                            const meminf::MeminfProtocol& proto,
                            meminf::ThreatSetting setting, bool adv,
                            const meminf::MeminfParams& p) {
  RunManifest m;
  std::uint64_t h = tok(kSeed, "meminf");
  h = tok(h, meminf::setting_name(setting));
  h = tok(h, std::to_string(p.attack_epochs));
  h = tok(h, num(p.attack_lr));
  h = tok(h, std::to_string(p.attack_batch));
  m.attack_config_hash = h;

  h = tok(kSeed, "meminf_aux");
  h = ids_tok(h, proto.atk_members);
  h = ids_tok(h, proto.atk_nonmembers);
  if (proto.shadow) {
    h = tok(h, "shadow");
    h = tok(h, std::to_string(proto.shadow->seed));
    h = tok(h, model::model_config_to_json(proto.shadow->config).dump());
  }
  m.aux_hash = h;

  h = tok(kSeed, "meminf_features");
  h = tok(h, proto.feature_setting == meminf::FeatureSetting::Wb ? "wb" : "bb");
  h = tok(h, std::to_string(target.meta.num_classes));
  if (proto.feature_setting == meminf::FeatureSetting::Wb)
    h = tok(h, std::to_string((target.embedding_dim() + 1) *
                              target.meta.num_classes));
  if (adv) h = tok(h, "adv_l2");
  m.feature_schema_hash = h;

  h = tok(kSeed, "meminf_eval");
  h = ids_tok(h, proto.eval_members);
  h = ids_tok(h, proto.eval_nonmembers);
  m.eval_hash = h;
  return m;
}

RunManifest lira_manifest(const model::TrainedModel& target,
                          const data::DatasetBundle& bundle,
                          const data::SampleSet& candidates, bool adv,
                          const meminf::MeminfParams& p) {
  RunManifest m;
  std::uint64_t h = tok(kSeed, "lira");
  h = tok(h, std::to_string(p.lira_fleet_size));
  m.attack_config_hash = h;

  h = tok(kSeed, "lira_aux");
  h = ids_tok(h, candidates);
  h = ids_tok(h, bundle.shadow_test);
  h = tok(h, model::model_config_to_json(
                 p.shadow_config.value_or(target.config))
                 .dump());
  m.aux_hash = h;

  h = tok(kSeed, "lira_obs");
  h = tok(h, adv ? "conf+adv_l2" : "conf");
  m.feature_schema_hash = h;

  m.eval_hash = ids_tok(tok(kSeed, "lira_eval"), candidates);
  return m;
}

RunManifest propinf_manifest(const std::vector<model::FleetMember>& fleet,
                             const propinf::QueryAux& query_aux, bool adv,
                             const propinf::PropinfParams& p,
                             int num_classes) {
  RunManifest m;
  std::uint64_t h = tok(kSeed, "propinf");
  h = tok(h, std::to_string(p.epochs));
  h = tok(h, num(p.learning_rate));
  h = tok(h, num(p.holdout_fraction));
  h = tok(h, std::to_string(p.seed));
  m.attack_config_hash = h;

  h = tok(kSeed, "propinf_aux");
  for (const auto& member : fleet) {
    h = tok(h, member.proportion.label());
    h = tok(h, std::to_string(member.seed));
  }
  for (const auto& [prop, set] : query_aux) {
    h = tok(h, prop.label());
    h = ids_tok(h, set);
  }
  m.aux_hash = h;

  h = tok(kSeed, "posterior_features");
  h = tok(h, std::to_string(num_classes));
  std::size_t total = 0;
  for (const auto& [prop, set] : query_aux) {
    h = tok(h, prop.label());
    h = tok(h, std::to_string(set.size()));
    total += set.size();
  }
  if (adv) {
    h = tok(h, "adv_l2");
    h = tok(h, std::to_string(total));
  }
  m.feature_schema_hash = h;

  h = tok(kSeed, "fleet_holdout");
  h = tok(h, num(p.holdout_fraction));
  h = tok(h, std::to_string(p.seed));
  h = tok(h, std::to_string(fleet.size()));
  m.eval_hash = h;
  return m;
}

// Adversarial distance of every query sample against one model, in the
// order posterior_features visits the sets. Distances from different
// models live on different scales, so each block is recentred on its own
// median and rescaled by its median absolute deviation; a degenerate block
// (a zero budget) stays raw so a no-op probe keeps its zero columns.
Vec query_adv_block(const model::TrainedModel& m,
                    const propinf::QueryAux& query_aux,
                    const adversarial::AdvProfileParams& base,
                    std::uint64_t seed, int workers) {
  adversarial::AdvProfileParams p = base;
  p.seed = seed;
  p.workers = workers;
  data::SampleSet flat;
  for (std::size_t idx : propinf::query_visit_order(query_aux))
    flat.insert(flat.end(), query_aux[idx].second.begin(),
                query_aux[idx].second.end());
  Vec block = adversarial::adv_l2_profile(m, flat, p);
  if (block.size() == 0) return block;
  std::vector<double> work(block.data(), block.data() + block.size());
  const std::size_t mid = work.size() / 2;
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(mid),
                   work.end());
  const double center = work[mid];
  for (double& v : work) v = std::abs(v - center);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(mid),
                   work.end());
  const double scale = work[mid];
  if (scale <= 1e-12) return block;
  return (block.array() - center) / scale;
}

double proportion_shift(const PropinfSummary& inferred,
                        const data::Sample& s, data::LabelAxis axis) {
  const int v = data::axis_value(s, axis);
  if (v < 0 ||
      v >= static_cast<int>(inferred.proportion.weights.size()))
    throw Error(ErrorCode::IncompatibleUpstream,
                "inferred proportion does not cover a sample's value");
  return inferred.proportion.weights[static_cast<std::size_t>(v)] - 0.5;
}

// Gate encoder over the unranked posterior vector: four dense layers down
// to one real-valued lambda.
nn::Network build_gate_encoder(int num_classes, std::uint64_t seed) {
  nn::Network enc;
  enc.add_dense(num_classes, 16);
  enc.add_relu(16);
  enc.add_dense(16, 16);
  enc.add_relu(16);
  enc.add_dense(16, 8);
  enc.add_relu(8);
  enc.add_dense(8, 1);
  Rng rng(seed);
  enc.finalize(rng);
  return enc;
}

struct CalibratedAttack {
  meminf::MeminfAttackModel attack;
  nn::Network encoder;
};

// Joint optimization of the attack model and the gate encoder against the
// cross-entropy of the calibrated score p + lambda * shift. Samples whose
// shift is exactly zero contribute the plain attack gradient p - y and touch
// neither the encoder forward pass nor its gradient, so a proportion of
// exactly one half leaves the whole run identical to the standalone trainer
// (the encoder coordinates never accumulate gradient and Adam holds them
// still).
CalibratedAttack train_calibrated_attack(
    const std::vector<meminf::AttackFeatureRecord>& records,
    const std::vector<Vec>& encoder_inputs, const std::vector<double>& shifts,
    meminf::FeatureSetting fs, int num_classes, std::uint64_t attack_seed,
    std::uint64_t encoder_seed, int epochs, double lr, int batch) {
  if (epochs < 1 || batch < 1 || !(lr > 0.0))
    throw Error(ErrorCode::InvalidAttackConfig,
                "attack training hyperparameters out of range");
  CalibratedAttack out;
  out.attack = meminf::init_meminf_attack_model(records, fs, attack_seed);
  out.encoder = build_gate_encoder(num_classes, encoder_seed);

  std::vector<std::vector<Vec>> inputs;
  std::vector<double> labels;
  inputs.reserve(records.size());
  for (const auto& r : records) {
    inputs.push_back(out.attack.standardized_inputs(r));
    labels.push_back(static_cast<double>(*r.member));
  }

  const Eigen::Index a_count =
      static_cast<Eigen::Index>(out.attack.net.param_count());
  const Eigen::Index e_count =
      static_cast<Eigen::Index>(out.encoder.param_count());
  Vec flat(a_count + e_count);
  flat << out.attack.net.flat_params(), out.encoder.params();
  Vec attack_grad(a_count), encoder_grad(e_count), grad(a_count + e_count);
  nn::Adam adam(static_cast<std::size_t>(a_count + e_count), lr);
  Rng shuffle(derive_seed(attack_seed, "shuffle"));
  std::vector<std::vector<Vec>> branch_acts;
  std::vector<Vec> head_acts, enc_acts;
  constexpr double kLo = 1e-3, kHi = 1.0 - 1e-3;

  const std::size_t n = inputs.size();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    auto order = shuffle.permutation(n);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(batch)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(batch));
      attack_grad.setZero();
      encoder_grad.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        Vec logit = out.attack.net.forward(inputs[i], branch_acts, head_acts);
        const double p = nn::sigmoid(logit[0]);
        const double t = shifts[i];
        Vec g(1);
        if (t == 0.0) {
          g[0] = p - labels[i];
          out.attack.net.backward(branch_acts, head_acts, g, attack_grad);
          continue;
        }
        Vec lambda = out.encoder.forward(encoder_inputs[i], enc_acts);
        const double c = p + lambda[0] * t;
        if (c <= kLo || c >= kHi) continue;  // loss is flat past the clamp
        const double dldc = (c - labels[i]) / (c * (1.0 - c));
        g[0] = dldc * p * (1.0 - p);
        out.attack.net.backward(branch_acts, head_acts, g, attack_grad);
        Vec ge(1);
        ge[0] = dldc * t;
        out.encoder.backward(enc_acts, ge, encoder_grad);
      }
      grad << attack_grad, encoder_grad;
      grad /= static_cast<double>(stop - start);
      adam.step(flat, grad);
      out.attack.net.set_flat_params(flat.head(a_count));
      out.encoder.params() = flat.tail(e_count);
    }
  }
  if (!flat.allFinite())
    throw Error(ErrorCode::DivergedTraining,
                "calibrated attack parameters are not finite");
  return out;
}

}  // namespace

std::string kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Adv: return "adv";
    case AttackKind::AttrInf: return "attrinf";
    case AttackKind::MemInf: return "meminf";
    case AttackKind::PropInf: return "propinf";
  }
  throw Error(ErrorCode::Internal, "unreachable attack kind");
}

AttackKind kind_from_name(const std::string& name) {
  if (name == "adv") return AttackKind::Adv;
  if (name == "attrinf") return AttackKind::AttrInf;
  if (name == "meminf") return AttackKind::MemInf;
  if (name == "propinf") return AttackKind::PropInf;
  throw Error(ErrorCode::InvalidAttackConfig,
              "unknown attack kind '" + name + "'");
}

std::string level_name(Level level) {
  switch (level) {
    case Level::Preparation: return "preparation";
    case Level::Execution: return "execution";
    case Level::Evaluation: return "evaluation";
  }
  throw Error(ErrorCode::Internal, "unreachable composition level");
}

Level level_from_name(const std::string& name) {
  if (name == "preparation") return Level::Preparation;
  if (name == "execution") return Level::Execution;
  if (name == "evaluation") return Level::Evaluation;
  throw Error(ErrorCode::InvalidAttackConfig,
              "unknown composition level '" + name + "'");
}

std::string mode_name(PropinfMode mode) {
  return mode == PropinfMode::Empirical ? "empirical" : "theoretical";
}

PropinfMode mode_from_name(const std::string& name) {
  if (name == "empirical") return PropinfMode::Empirical;
  if (name == "theoretical") return PropinfMode::Theoretical;
  throw Error(ErrorCode::InvalidAttackConfig,
              "unknown proportion mode '" + name + "'");
}

void CompositionPlan::validate() const {
  const bool prep_attrinf = support == AttackKind::PropInf &&
                            primary == AttackKind::AttrInf &&
                            level == Level::Preparation;
  const bool exec_meminf = support == AttackKind::Adv &&
                           primary == AttackKind::MemInf &&
                           level == Level::Execution;
  const bool exec_propinf = support == AttackKind::Adv &&
                            primary == AttackKind::PropInf &&
                            level == Level::Execution;
  const bool eval_meminf = support == AttackKind::PropInf &&
                           primary == AttackKind::MemInf &&
                           level == Level::Evaluation;
  if (!(prep_attrinf || exec_meminf || exec_propinf || eval_meminf))
    throw Error(ErrorCode::InvalidAttackConfig,
                "unsupported composition " + kind_name(support) + "->" +
                    kind_name(primary) + "@" + level_name(level));
  if (chained && (exec_meminf || exec_propinf))
    throw Error(ErrorCode::InvalidAttackConfig,
                "adversarial support stages cannot themselves be chained");
  if (chained && prep_attrinf && mode == PropinfMode::Theoretical)
    throw Error(ErrorCode::InvalidAttackConfig,
                "a chained proportion carries a confidence and must be "
                "applied empirically");
}

std::string CompositionPlan::label() const {
  std::string head = chained ? "adv->propinf->" : kind_name(support) + "->";
  return head + kind_name(primary) + "@" + level_name(level);
}

PropinfSummary summarize_propinf(const propinf::PropinfOutcome& outcome) {
  PropinfSummary s;
  s.proportion = outcome.predicted_proportion;
  s.confidence = outcome.confidence;
  return s;
}

Eigen::VectorXd propinf_to_lira(const Eigen::VectorXd& scores,
                                const std::vector<int>& property_of,
                                const data::PropertyProportion& prior) {
  prior.validate();
  if (property_of.size() != static_cast<std::size_t>(scores.size()))
    throw Error(ErrorCode::InvalidAttackConfig,
                "property values misaligned with the score vector");
  Eigen::VectorXd adjusted(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const int v = property_of[static_cast<std::size_t>(i)];
    if (v < 0 || v >= static_cast<int>(prior.weights.size()))
      throw Error(ErrorCode::IncompatibleUpstream,
                  "prior does not cover a sample's value");
    adjusted[i] = scores[i] * prior.weights[static_cast<std::size_t>(v)];
  }
  return adjusted;
}

data::SampleSet resample_by_inferred_proportion(const data::SampleSet& pool,
                                                const PropinfSummary& inferred,
                                                PropinfMode mode,
                                                data::LabelAxis axis,
                                                std::uint64_t seed) {
  inferred.proportion.validate();
  if (!(inferred.confidence >= 0.0) || inferred.confidence > 1.0)
    throw Error(ErrorCode::InvalidAttackConfig,
                "inference confidence must lie in [0, 1]");
  const double c =
      mode == PropinfMode::Empirical ? inferred.confidence : 1.0;

  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int v = data::axis_value(pool[i], axis);
    if (v < 0 ||
        v >= static_cast<int>(inferred.proportion.weights.size()))
      throw Error(ErrorCode::IncompatibleUpstream,
                  "inferred proportion does not cover a pool value");
    strata[v].push_back(i);
  }

  std::vector<std::size_t> chosen;
  for (const auto& [v, indices] : strata) {
    const double ratio =
        c * (1.0 - inferred.proportion.weights[static_cast<std::size_t>(v)]);
    const auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(indices.size()) * ratio));
    Rng rng(derive_seed(seed, "stratum", static_cast<std::uint64_t>(v)));
    auto perm = rng.permutation(indices.size());
    for (std::size_t k = 0; k < count; ++k)
      chosen.push_back(indices[perm[k]]);
  }

  data::SampleSet out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(pool[i]);
  std::sort(out.begin(), out.end(),
            [](const data::Sample& a, const data::Sample& b) {
              return a.id < b.id;
            });
  return out;
}

CompositionOutcome propinf_to_attrinf(const model::TrainedModel& target,
                                      const data::SampleSet& aux_pool,
                                      const data::SampleSet& eval_set,
                                      const PropinfSummary& inferred,
                                      const PropinfAttrinfParams& params) {
  if (inferred.proportion.weights.empty())
    throw Error(ErrorCode::MissingUpstream,
                "composition needs an upstream proportion inference");
  CompositionOutcome out;
  out.plan = {AttackKind::PropInf, AttackKind::AttrInf, Level::Preparation,
              params.mode, false};
  out.plan.validate();

  const data::SampleSet resampled = resample_by_inferred_proportion(
      aux_pool, inferred, params.mode, data::LabelAxis::Attribute,
      derive_seed(params.seed, "resample"));

  out.origin = attrinf::attrinf_attack(target, aux_pool, eval_set,
                                       params.attrinf);
  out.composition = attrinf::attrinf_attack(target, resampled, eval_set,
                                            params.attrinf);
  out.origin_manifest =
      attrinf_manifest(target, aux_pool, eval_set, params.attrinf);
  out.composition_manifest =
      attrinf_manifest(target, resampled, eval_set, params.attrinf);
  return out;
}

CompositionOutcome adv_to_meminf(const model::TrainedModel& target,
                                 const data::DatasetBundle& bundle,
                                 meminf::ThreatSetting setting,
                                 const meminf::MeminfParams& params) {
  CompositionOutcome out;
  out.plan = {AttackKind::Adv, AttackKind::MemInf, Level::Execution,
              PropinfMode::Empirical, false};
  out.plan.validate();

  // The probe must match the access the setting grants: gradient search
  // needs white-box access, everything else stays query-only.
  meminf::MeminfParams p = params;
  p.adv.mode = (setting == meminf::ThreatSetting::WbShadow ||
                setting == meminf::ThreatSetting::WbPartial)
                   ? adversarial::AttackMode::Pgd
                   : adversarial::AttackMode::Square;

  if (setting == meminf::ThreatSetting::Lira) {
    out.origin = meminf::meminf_attack(target, bundle, setting, false, p);
    out.composition = meminf::meminf_attack(target, bundle, setting, true, p);
    data::SampleSet eval_mem, eval_non;
    meminf::balanced_eval_split(bundle.target_train, bundle.target_test,
                                p.max_eval_per_side, eval_mem, eval_non);
    data::SampleSet candidates = eval_mem;
    candidates.insert(candidates.end(), eval_non.begin(), eval_non.end());
    out.origin_manifest = lira_manifest(target, bundle, candidates, false, p);
    out.composition_manifest =
        lira_manifest(target, bundle, candidates, true, p);
    return out;
  }

  const meminf::MeminfProtocol proto =
      meminf::build_meminf_protocol(target, bundle, setting, p);
  out.origin = meminf::meminf_attack_with_protocol(target, proto, false, p);
  out.composition =
      meminf::meminf_attack_with_protocol(target, proto, true, p);
  out.origin_manifest = meminf_manifest(target, proto, setting, false, p);
  out.composition_manifest = meminf_manifest(target, proto, setting, true, p);
  return out;
}

AdvPropinfOutcome adv_to_propinf(const model::TrainedModel& target,
                                 const std::vector<model::FleetMember>& fleet,
                                 const propinf::QueryAux& query_aux,
                                 const AdvPropinfParams& params) {
  AdvPropinfOutcome out;
  out.outcome.plan = {AttackKind::Adv, AttackKind::PropInf, Level::Execution,
                      PropinfMode::Empirical, false};
  out.outcome.plan.validate();

  std::vector<int> fleet_labels;
  const std::vector<data::PropertyProportion> label_set =
      propinf::fleet_label_set(fleet, fleet_labels);

  const Vec target_features = propinf::posterior_features(target, query_aux);
  Mat fleet_features(static_cast<Eigen::Index>(fleet.size()),
                     target_features.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const Vec row = propinf::posterior_features(fleet[i].model, query_aux);
    if (row.size() != target_features.size())
      throw Error(ErrorCode::IncompatibleUpstream,
                  "fleet features have inconsistent dimensions");
    fleet_features.row(static_cast<Eigen::Index>(i)) = row;
  }
  out.origin_run = propinf::propinf_attack_features(
      target_features, fleet_features, fleet_labels, label_set,
      params.propinf);

  // One adversarial distance per query sample, appended after the posterior
  // block in the same visiting order, for every row and the target alike.
  const Vec target_adv =
      query_adv_block(target, query_aux, params.adv,
                      derive_seed(params.seed, "adv/target"), params.workers);
  const Eigen::Index q = target_adv.size();
  Mat fleet_adv(fleet_features.rows(), q);
  for (std::size_t i = 0; i < fleet.size(); ++i)
    fleet_adv.row(static_cast<Eigen::Index>(i)) = query_adv_block(
        fleet[i].model, query_aux, params.adv,
        derive_seed(params.seed, "adv/fleet", i), params.workers);

  Vec widened_target(target_features.size() + q);
  widened_target << target_features, target_adv;
  Mat widened_fleet(fleet_features.rows(), fleet_features.cols() + q);
  widened_fleet << fleet_features, fleet_adv;
  out.composition_run = propinf::propinf_attack_features(
      widened_target, widened_fleet, fleet_labels, label_set, params.propinf);

  const int k = target.meta.num_classes;
  out.outcome.origin = out.origin_run.fleet_result;
  out.outcome.composition = out.composition_run.fleet_result;
  out.outcome.origin_manifest =
      propinf_manifest(fleet, query_aux, false, params.propinf, k);
  out.outcome.composition_manifest =
      propinf_manifest(fleet, query_aux, true, params.propinf, k);
  return out;
}

PropinfMeminfOutcome propinf_to_meminf(const model::TrainedModel& target,
                                       const data::DatasetBundle& bundle,
                                       meminf::ThreatSetting setting,
                                       const PropinfSummary& inferred,
                                       const meminf::MeminfParams& params) {
  if (inferred.proportion.weights.empty())
    throw Error(ErrorCode::MissingUpstream,
                "composition needs an upstream proportion inference");
  inferred.proportion.validate();
  PropinfMeminfOutcome out;
  out.outcome.plan = {AttackKind::PropInf, AttackKind::MemInf,
                      Level::Evaluation, PropinfMode::Empirical, false};
  out.outcome.plan.validate();

  if (setting == meminf::ThreatSetting::Lira) {
    if (bundle.target_train.empty() || bundle.target_test.empty())
      throw Error(ErrorCode::MissingUpstream,
                  "bundle lacks target partitions");
    if (bundle.shadow_test.empty())
      throw Error(ErrorCode::MissingUpstream,
                  "setting needs a held-out monitor partition");
    data::SampleSet eval_mem, eval_non;
    meminf::balanced_eval_split(bundle.target_train, bundle.target_test,
                                params.max_eval_per_side, eval_mem, eval_non);
    data::SampleSet candidates = eval_mem;
    candidates.insert(candidates.end(), eval_non.begin(), eval_non.end());
    std::vector<int> truth(eval_mem.size(), 1);
    truth.insert(truth.end(), eval_non.size(), 0);

    const meminf::LiraFleet fleet = meminf::build_lira_fleet(
        candidates, bundle.shadow_test,
        params.shadow_config.value_or(target.config), bundle.meta,
        params.lira_fleet_size, derive_seed(params.seed, "lira"),
        params.workers);
    out.outcome.origin = meminf::lira_attack(
        target, fleet.shadows, fleet.in_matrix, candidates, truth);

    // Prior adjustment: each member-favoring score is scaled by the inferred
    // prior of the sample's value; "member" survives where the adjusted
    // score stays positive.
    const Eigen::Index n =
        static_cast<Eigen::Index>(out.outcome.origin.scores.size());
    Eigen::VectorXd base(n);
    std::vector<int> values;
    values.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      base[i] = out.outcome.origin.scores[static_cast<std::size_t>(i)];
      values.push_back(data::axis_value(
          candidates[static_cast<std::size_t>(i)], bundle.axis));
    }
    const Eigen::VectorXd adjusted =
        propinf_to_lira(base, values, inferred.proportion);
    out.calibration.base = base;
    out.calibration.shift = adjusted - base;
    out.calibration.lambda.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.calibration.lambda[i] =
          inferred.proportion
              .weights[static_cast<std::size_t>(values[static_cast<std::size_t>(i)])];
      out.outcome.composition.scores.push_back(adjusted[i]);
      out.outcome.composition.predictions.push_back(adjusted[i] > 0.0 ? 1 : 0);
      out.outcome.composition.ground_truth.push_back(
          truth[static_cast<std::size_t>(i)]);
    }
    metrics::fill_binary_metrics(out.outcome.composition);
    out.outcome.origin_manifest =
        lira_manifest(target, bundle, candidates, false, params);
    out.outcome.composition_manifest = out.outcome.origin_manifest;
    return out;
  }

  const meminf::MeminfProtocol proto =
      meminf::build_meminf_protocol(target, bundle, setting, params);
  out.outcome.origin =
      meminf::meminf_attack_with_protocol(target, proto, false, params);

  const model::TrainedModel& query_model =
      proto.shadow ? *proto.shadow : target;
  const auto train_records = meminf::build_meminf_features(
      query_model, proto.atk_members, proto.atk_nonmembers,
      proto.feature_setting);
  std::vector<Vec> encoder_inputs;
  std::vector<double> shifts;
  auto add_side = [&](const model::TrainedModel& m, const data::Sample& s) {
    encoder_inputs.push_back(m.posteriors(s.features));
    shifts.push_back(proportion_shift(inferred, s, bundle.axis));
  };
  for (const auto& s : proto.atk_members) add_side(query_model, s);
  for (const auto& s : proto.atk_nonmembers) add_side(query_model, s);

  const CalibratedAttack calibrated = train_calibrated_attack(
      train_records, encoder_inputs, shifts, proto.feature_setting,
      bundle.meta.num_classes, derive_seed(params.seed, "attack_model"),
      derive_seed(params.seed, "lambda_init"), params.attack_epochs,
      params.attack_lr, params.attack_batch);

  const auto eval_records = meminf::build_meminf_features(
      target, proto.eval_members, proto.eval_nonmembers,
      proto.feature_setting);
  encoder_inputs.clear();
  shifts.clear();
  for (const auto& s : proto.eval_members) add_side(target, s);
  for (const auto& s : proto.eval_nonmembers) add_side(target, s);

  const Eigen::Index n = static_cast<Eigen::Index>(eval_records.size());
  out.calibration.base.resize(n);
  out.calibration.lambda.resize(n);
  out.calibration.shift.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double base = calibrated.attack.score(eval_records[idx]);
    const double lambda =
        calibrated.encoder.forward(encoder_inputs[idx])[0];
    const double shift = lambda * shifts[idx];
    const double score = base + shift;
    out.calibration.base[i] = base;
    out.calibration.lambda[i] = lambda;
    out.calibration.shift[i] = shift;
    out.outcome.composition.scores.push_back(score);
    out.outcome.composition.predictions.push_back(score >= 0.5 ? 1 : 0);
    out.outcome.composition.ground_truth.push_back(
        *eval_records[idx].member);
  }
  metrics::fill_binary_metrics(out.outcome.composition);
  out.outcome.origin_manifest =
      meminf_manifest(target, proto, setting, false, params);
  out.outcome.composition_manifest = out.outcome.origin_manifest;
  return out;
}

ChainAttrinfOutcome chain_adv_propinf_attrinf(
    const model::TrainedModel& target,
    const std::vector<model::FleetMember>& fleet,
    const propinf::QueryAux& query_aux, const data::SampleSet& aux_pool,
    const data::SampleSet& eval_set, const ChainAttrinfParams& params) {
  ChainAttrinfOutcome out;
  out.propinf_stage = adv_to_propinf(target, fleet, query_aux,
                                     params.adv_propinf);
  out.forwarded = summarize_propinf(out.propinf_stage.composition_run);

  PropinfAttrinfParams downstream;
  downstream.attrinf = params.attrinf;
  downstream.mode = PropinfMode::Empirical;
  downstream.seed = params.seed;
  out.final_stage = propinf_to_attrinf(target, aux_pool, eval_set,
                                       out.forwarded, downstream);
  out.final_stage.plan.chained = true;
  out.final_stage.plan.validate();
  return out;
}

ChainMeminfOutcome chain_adv_propinf_meminf(
    const model::TrainedModel& target, const data::DatasetBundle& bundle,
    const std::vector<model::FleetMember>& fleet,
    const propinf::QueryAux& query_aux, meminf::ThreatSetting setting,
    const ChainMeminfParams& params) {
  ChainMeminfOutcome out;
  out.propinf_stage = adv_to_propinf(target, fleet, query_aux,
                                     params.adv_propinf);
  out.forwarded = summarize_propinf(out.propinf_stage.composition_run);
  out.final_stage = propinf_to_meminf(target, bundle, setting, out.forwarded,
                                      params.meminf);
  out.final_stage.outcome.plan.chained = true;
  out.final_stage.outcome.plan.validate();
  return out;
}

}  // namespace inferlab::compose
