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

#include "inferlab/adversarial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace inferlab::adversarial {

namespace {

// Margin of the reference class over the best competitor. Negative means the
// prediction has already moved away from the reference class.
double margin(const Eigen::VectorXd& posteriors, int reference) {
  double best_other = -1.0;
  for (int k = 0; k < posteriors.size(); ++k)
    if (k != reference) best_other = std::max(best_other, posteriors[k]);
  return posteriors[reference] - best_other;
}

void check_iterate(const Eigen::VectorXd& x, const Eigen::VectorXd& origin,
                   double epsilon) {
  const double overshoot = (x - origin).cwiseAbs().maxCoeff() - epsilon;
  if (overshoot > 1e-12 || x.minCoeff() < -1e-12 || x.maxCoeff() > 1.0 + 1e-12)
    throw Error(ErrorCode::ContractViolation,
                "adversarial iterate left the feasible region");
}

}  // namespace

std::string attack_mode_name(AttackMode mode) {
  return mode == AttackMode::Pgd ? "pgd" : "square";
}

AttackMode attack_mode_from_name(const std::string& name) {
  if (name == "pgd") return AttackMode::Pgd;
  if (name == "square") return AttackMode::Square;
  throw Error(ErrorCode::InvalidAttackConfig,
              "unknown attack mode '" + name + "'");
}

AdvResult pgd_attack(const model::TrainedModel& m, const data::Sample& sample,
                     const PgdParams& params) {
  if (params.epsilon < 0.0 || params.step < 0.0 || params.max_iters < 0)
    throw Error(ErrorCode::InvalidAttackConfig,
                "pgd parameters must be nonnegative");
  const Eigen::VectorXd& origin = sample.features;
  AdvResult result;
  result.adversarial = origin;
  if (params.epsilon == 0.0 || params.step == 0.0 || params.max_iters == 0)
    return result;

  // Ascend the loss of the original prediction rather than the task label:
  // the search measures distance to the decision boundary, so it must push
  // against whatever class the model currently assigns, even a wrong one.
  const int original_prediction = m.predict(origin);
  Eigen::VectorXd x = origin;
  for (int it = 1; it <= params.max_iters; ++it) {
    const Eigen::VectorXd grad = m.input_gradient(x, original_prediction);
    x += params.step * grad.cwiseSign();
    x = origin + (x - origin)
                     .cwiseMax(-params.epsilon)
                     .cwiseMin(params.epsilon);
    x = x.cwiseMax(0.0).cwiseMin(1.0);
    check_iterate(x, origin, params.epsilon);
    result.adversarial = x;
    result.l2_distance = (x - origin).norm();
    result.queries_or_iters = it;
    if (m.predict(x) != original_prediction) {
      result.flipped = true;
      return result;
    }
  }
  return result;
}

AdvResult square_attack(const model::TrainedModel& m,
                        const data::Sample& sample,
                        const SquareParams& params, std::uint64_t seed) {
  if (params.epsilon < 0.0 || params.max_queries < 0 ||
      params.patch_fraction <= 0.0 || params.patch_fraction > 1.0)
    throw Error(ErrorCode::InvalidAttackConfig,
                "square parameters out of range");
  const Eigen::VectorXd& origin = sample.features;
  AdvResult result;
  result.adversarial = origin;
  if (params.epsilon == 0.0 || params.max_queries == 0) return result;

  const int height = m.meta.height;
  const int width = m.meta.width;
  const int plane = height * width;
  const int original_prediction = m.predict(origin);

  Rng rng(seed);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(origin.size());
  double current_margin = margin(m.posteriors(origin), original_prediction);

  // The patch area halves at fixed fractions of the query budget, scaled from
  // the method's canonical 10k-query schedule.
  static constexpr std::array<double, 8> kHalvings = {
      0.001, 0.005, 0.02, 0.1, 0.2, 0.4, 0.6, 0.8};
  double fraction = params.patch_fraction;
  std::size_t next_halving = 0;

  for (int q = 1; q <= params.max_queries; ++q) {
    while (next_halving < kHalvings.size() &&
           q > kHalvings[next_halving] * params.max_queries) {
      fraction /= 2.0;
      ++next_halving;
    }
    int side = static_cast<int>(std::lround(std::sqrt(fraction * plane)));
    side = std::clamp(side, 1, std::min(height, width));
    const int row0 = static_cast<int>(rng.below(height - side + 1));
    const int col0 = static_cast<int>(rng.below(width - side + 1));

    Eigen::VectorXd candidate_delta = delta;
    const double sign = rng.below(2) == 0 ? params.epsilon : -params.epsilon;
    for (int r = row0; r < row0 + side; ++r)
      for (int col = col0; col < col0 + side; ++col)
        candidate_delta[r * width + col] = sign;
    const Eigen::VectorXd candidate =
        (origin + candidate_delta).cwiseMax(0.0).cwiseMin(1.0);
    check_iterate(candidate, origin, params.epsilon);
    const Eigen::VectorXd posteriors = m.posteriors(candidate);
    result.queries_or_iters = q;
    if (nn::argmax_lowest(posteriors) != original_prediction) {
      result.adversarial = candidate;
      result.l2_distance = (candidate - origin).norm();
      result.flipped = true;
      return result;
    }
    const double candidate_margin = margin(posteriors, original_prediction);
    if (candidate_margin <= current_margin) {
      delta = candidate_delta;
      current_margin = candidate_margin;
      result.adversarial = candidate;
      result.l2_distance = (candidate - origin).norm();
    }
  }
  return result;
}

Eigen::VectorXd adv_l2_profile(const model::TrainedModel& m,
                               const data::SampleSet& samples,
                               const AdvProfileParams& params) {
  Eigen::VectorXd distances(samples.size());
  model::parallel_for(samples.size(), params.workers, [&](std::size_t i) {
    const AdvResult r =
        params.mode == AttackMode::Pgd
            ? pgd_attack(m, samples[i], params.pgd)
            : square_attack(m, samples[i], params.square,
                            derive_seed(params.seed, "adv_l2", i));
    distances[static_cast<Eigen::Index>(i)] = r.l2_distance;
  });
  return distances;
}

}  // namespace inferlab::adversarial
