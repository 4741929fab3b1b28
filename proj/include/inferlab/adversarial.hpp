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

#ifndef INFERLAB_ADVERSARIAL_HPP_
#define INFERLAB_ADVERSARIAL_HPP_

#include <cstdint>
#include <string>

#include "inferlab/model.hpp"

namespace inferlab::adversarial {

// Outcome of one adversarial search. `adversarial` always holds the final
// iterate, whether or not the label flipped; `l2_distance` is the Euclidean
// distance from the original features at the moment the search stopped.
struct AdvResult {
  Eigen::VectorXd adversarial;
  double l2_distance = 0.0;
  bool flipped = false;
  int queries_or_iters = 0;
};

struct PgdParams {
  double epsilon = 8.0 / 255.0;  // infinity-norm ball radius
  double step = 2.0 / 255.0;
  int max_iters = 50;
};

struct SquareParams {
  double epsilon = 8.0 / 255.0;
  int max_queries = 1000;
  double patch_fraction = 0.3;  // initial fraction of pixels per patch
};

enum class AttackMode { Pgd, Square };

std::string attack_mode_name(AttackMode mode);
AttackMode attack_mode_from_name(const std::string& name);

// Signed-gradient ascent on the loss of the model's original prediction,
// projected to the epsilon-ball and the unit box after every step. Stops at
// the first iterate whose predicted label differs from that prediction.
AdvResult pgd_attack(const model::TrainedModel& m, const data::Sample& sample,
                     const PgdParams& params);

// Random search over square patches of +/-epsilon perturbation, scored by the
// posterior margin of the originally predicted class. A candidate is kept iff
// it does not increase that margin. Deterministic given the seed; the patch
// side shrinks on a fixed schedule across the query budget.
AdvResult square_attack(const model::TrainedModel& m,
                        const data::Sample& sample,
                        const SquareParams& params, std::uint64_t seed);

struct AdvProfileParams {
  AttackMode mode = AttackMode::Pgd;
  PgdParams pgd;
  SquareParams square;
  std::uint64_t seed = 0;  // square mode derives one stream per sample
  int workers = 1;
};

// Per-sample adversarial distance: the L2 norm at the first flip, or at
// budget exhaustion for samples that never flip.
Eigen::VectorXd adv_l2_profile(const model::TrainedModel& m,
                               const data::SampleSet& samples,
                               const AdvProfileParams& params);

}  // namespace inferlab::adversarial

#endif  // INFERLAB_ADVERSARIAL_HPP_
