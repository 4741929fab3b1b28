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

#include <cmath>

#include "inferlab/adversarial.hpp"

using namespace inferlab;
using namespace inferlab::adversarial;

namespace {

// A model whose logits are exactly W x + b, for closed-form attack checks.
model::TrainedModel linear_model(const Eigen::MatrixXd& W,
                                 const Eigen::VectorXd& b,
                                 const data::DatasetMeta& meta) {
  model::TrainedModel m;
  m.meta = meta;
  nn::Network net;
  net.add_dense(static_cast<int>(W.cols()), static_cast<int>(W.rows()));
  Rng rng(1);
  net.finalize(rng);
  Eigen::VectorXd p(W.size() + b.size());
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < W.cols(); ++c)
    for (Eigen::Index r = 0; r < W.rows(); ++r) p[k++] = W(r, c);
  for (Eigen::Index r = 0; r < b.size(); ++r) p[k++] = b[r];
  net.params() = p;
  m.net = std::move(net);
  return m;
}

data::DatasetMeta tiny_meta() {
  data::DatasetMeta meta;
  meta.height = 1;
  meta.width = 2;
  meta.num_classes = 2;
  return meta;
}

data::Sample tiny_sample(double a, double b, int label) {
  data::Sample s;
  s.id = 0;
  s.features = Eigen::Vector2d(a, b);
  s.task_label = label;
  return s;
}

struct WeakModelFixture {
  data::Dataset d;
  model::TrainedModel m;
  data::SampleSet members, nonmembers;

  WeakModelFixture() {
    data::SyntheticSpec spec;
    spec.n_samples = 600;
    spec.task_signal = 0.3;
    spec.noise = 2.0;
    d = data::generate_synthetic(spec, 11);
    members.assign(d.samples.begin(), d.samples.begin() + 100);
    nonmembers.assign(d.samples.begin() + 100, d.samples.begin() + 200);
    data::SampleSet test(d.samples.begin() + 100, d.samples.end());
    model::ModelConfig cfg;
    cfg.architecture = model::Architecture::Mlp;
    cfg.hidden = 48;
    cfg.batch_size = 64;
    cfg.max_epochs = 40;
    cfg.overfit_threshold = 1.0;
    m = model::train_model(members, test, cfg, d.meta, 3);
  }
};

const WeakModelFixture& weak_fixture() {
  static WeakModelFixture f;
  return f;
}

}  // namespace

TEST_CASE("zero budgets leave the sample untouched") {
  auto meta = tiny_meta();
  auto m = linear_model(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(),
                        meta);
  auto s = tiny_sample(0.55, 0.50, 0);

  for (const auto& r : {pgd_attack(m, s, {.epsilon = 0.0}),
                        pgd_attack(m, s, {.max_iters = 0}),
                        pgd_attack(m, s, {.step = 0.0})}) {
    CHECK(r.adversarial == s.features);
    CHECK(r.l2_distance == 0.0);
    CHECK_FALSE(r.flipped);
    CHECK(r.queries_or_iters == 0);
  }
  for (const auto& r : {square_attack(m, s, {.epsilon = 0.0}, 7),
                        square_attack(m, s, {.max_queries = 0}, 7)}) {
    CHECK(r.adversarial == s.features);
    CHECK(r.l2_distance == 0.0);
    CHECK_FALSE(r.flipped);
    CHECK(r.queries_or_iters == 0);
  }
}

TEST_CASE("pgd on a linear model matches the hand-computed step") {
  auto meta = tiny_meta();
  auto m = linear_model(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(),
                        meta);

  SUBCASE("one step across a nearby boundary") {
    auto s = tiny_sample(0.55, 0.50, 0);
    REQUIRE(m.predict(s.features) == 0);
    auto r = pgd_attack(m, s, {.epsilon = 0.1, .step = 0.05, .max_iters = 50});
    CHECK(r.flipped);
    CHECK(r.queries_or_iters == 1);
    // The loss gradient points along (-1, +1), so one signed step lands on
    // (0.50, 0.55) and the distance is step * sqrt(2).
    CHECK(r.adversarial[0] == doctest::Approx(0.50).epsilon(1e-12));
    CHECK(r.adversarial[1] == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(r.l2_distance ==
          doctest::Approx(0.05 * std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("a logit tie is not a flip, so the crossing takes two steps") {
    // Dyadic values keep every iterate exact: (0.75, 0.5) -> (0.625, 0.625)
    // is a true tie (argmax stays at class 0), then (0.5, 0.75) flips.
    auto s = tiny_sample(0.75, 0.5, 0);
    auto r = pgd_attack(m, s, {.epsilon = 0.5, .step = 0.125, .max_iters = 50});
    CHECK(r.flipped);
    CHECK(r.queries_or_iters == 2);
    CHECK(r.l2_distance ==
          doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("the ball projection pins the iterate when epsilon < step") {
    auto s = tiny_sample(0.55, 0.50, 0);
    auto r = pgd_attack(m, s, {.epsilon = 0.01, .step = 0.05, .max_iters = 4});
    CHECK_FALSE(r.flipped);
    CHECK(r.queries_or_iters == 4);
    CHECK((r.adversarial - s.features).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.01).epsilon(1e-12));
  }
}

TEST_CASE("pgd iterates respect the ball and the unit box on a real model") {
  const auto& f = weak_fixture();
  PgdParams p{.epsilon = 0.1, .step = 0.02, .max_iters = 50};
  int flips = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& s = f.nonmembers[i];
    auto r = pgd_attack(f.m, s, p);
    CHECK((r.adversarial - s.features).cwiseAbs().maxCoeff() <=
          p.epsilon + 1e-12);
    CHECK(r.adversarial.minCoeff() >= 0.0);
    CHECK(r.adversarial.maxCoeff() <= 1.0);
    CHECK(r.l2_distance ==
          doctest::Approx((r.adversarial - s.features).norm()).epsilon(1e-9));
    CHECK(r.queries_or_iters <= p.max_iters);
    if (r.flipped) {
      ++flips;
      CHECK(f.m.predict(r.adversarial) != f.m.predict(s.features));
    }
  }
  CHECK(flips > 0);  // weak margins: some of 30 must flip at this budget
}

TEST_CASE("square attack is deterministic and respects its budget") {
  const auto& f = weak_fixture();
  SquareParams p{.epsilon = 0.3, .max_queries = 300};
  const auto& s = f.nonmembers[0];
  auto a = square_attack(f.m, s, p, 123);
  auto b = square_attack(f.m, s, p, 123);
  CHECK(a.adversarial == b.adversarial);
  CHECK(a.queries_or_iters == b.queries_or_iters);
  CHECK(a.flipped == b.flipped);
  CHECK(a.queries_or_iters <= p.max_queries);
  CHECK((a.adversarial - s.features).cwiseAbs().maxCoeff() <= p.epsilon + 1e-12);

  int flips = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    auto r = square_attack(f.m, f.nonmembers[i], p, 1000 + i);
    if (r.flipped) {
      ++flips;
      CHECK(f.m.predict(r.adversarial) != f.m.predict(f.nonmembers[i].features));
    }
  }
  CHECK(flips > 0);
}

TEST_CASE("a model that ignores its input never flips") {
  data::DatasetMeta meta;  // default 8x8 grid, 4 classes
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, meta.feature_dim());
  Eigen::VectorXd b(4);
  b << 1.0, 0.0, 0.0, 0.0;
  auto m = linear_model(W, b, meta);

  data::Sample s;
  s.id = 3;
  s.features = Eigen::VectorXd::Constant(meta.feature_dim(), 0.5);
  s.task_label = 0;
  auto r = square_attack(m, s, {.epsilon = 0.2, .max_queries = 50}, 9);
  CHECK_FALSE(r.flipped);
  CHECK(r.queries_or_iters == 50);  // budget exhausted, margin never improves
}

TEST_CASE("adv_l2_profile separates members from non-members when overfit") {
  const auto& f = weak_fixture();
  REQUIRE(f.m.log.back().train_accuracy -
              f.m.log.back().test_accuracy > 0.3);  // genuinely memorized

  AdvProfileParams p;
  p.mode = AttackMode::Pgd;
  p.pgd = {.epsilon = 0.5, .step = 0.05, .max_iters = 50};
  auto member_d = adv_l2_profile(f.m, f.members, p);
  auto nonmember_d = adv_l2_profile(f.m, f.nonmembers, p);
  CHECK(member_d.minCoeff() >= 0.0);
  CHECK(nonmember_d.minCoeff() >= 0.0);
  CHECK(member_d.allFinite());
  CHECK(nonmember_d.allFinite());
  CHECK(member_d.mean() > nonmember_d.mean());
}

TEST_CASE("adv_l2_profile is a no-op at zero epsilon and worker-invariant") {
  const auto& f = weak_fixture();
  AdvProfileParams zero;
  zero.pgd.epsilon = 0.0;
  auto z = adv_l2_profile(f.m, f.nonmembers, zero);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);

  AdvProfileParams sq;
  sq.mode = AttackMode::Square;
  sq.square = {.epsilon = 0.2, .max_queries = 60};
  sq.seed = 5;
  data::SampleSet subset(f.nonmembers.begin(), f.nonmembers.begin() + 10);
  auto serial = adv_l2_profile(f.m, subset, sq);
  sq.workers = 3;
  auto threaded = adv_l2_profile(f.m, subset, sq);
  CHECK(serial == threaded);
}

TEST_CASE("attack mode names round-trip and reject junk") {
  CHECK(attack_mode_from_name("pgd") == AttackMode::Pgd);
  CHECK(attack_mode_from_name("square") == AttackMode::Square);
  CHECK(attack_mode_name(AttackMode::Square) == "square");
  try {
    attack_mode_from_name("fgsm");
    FAIL("expected InvalidAttackConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidAttackConfig);
  }
}
