// Copyright 2026 The dialearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <filesystem>

#include "doctest.h"
#include "dialearn/ktd.hpp"
#include "oracles.hpp"

using namespace dialearn;

namespace {

Eigen::VectorXd random_vec(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * rng.uniform() - 1.0;
  return v;
}

}  // namespace

TEST_CASE("q_value is the block dot product") {
  const FeatureMap fmap{4, 3};
  KalmanState k = make_kalman(fmap.dim());
  Eigen::VectorXd s(4);
  s << 0.0, 1.0, 0.0, 0.0;
  for (std::size_t a = 0; a < 3; ++a) CHECK(q_value(k, fmap, s, a) == 0.0);
  k.theta[4 + 1] = 1.0;  // action 1, feature 1
  CHECK(q_value(k, fmap, s, 1) == 1.0);
  CHECK(q_value(k, fmap, s, 0) == 0.0);
  CHECK(q_value(k, fmap, s, 2) == 0.0);

  Rng rng(3);
  k.theta = random_vec(rng, 12);
  const Eigen::VectorXd x = random_vec(rng, 4);
  for (std::size_t a = 0; a < 3; ++a) {
    double dot = 0.0;
    for (std::size_t j = 0; j < 4; ++j) dot += k.theta[static_cast<Eigen::Index>(a * 4 + j)] * x[static_cast<Eigen::Index>(j)];
    CHECK(q_value(k, fmap, x, a) == doctest::Approx(dot).epsilon(1e-12));
  }
  CHECK_THROWS(q_value(k, fmap, x, 3));
}

TEST_CASE("q_value is linear in theta and greedy choice is scale invariant") {
  const FeatureMap fmap{5, 4};
  Rng rng(11);
  KalmanState a = make_kalman(fmap.dim()), b = a, c = a;
  for (int trial = 0; trial < 50; ++trial) {
    a.theta = random_vec(rng, 20);
    b.theta = random_vec(rng, 20);
    c.theta = 0.7 * a.theta - 1.3 * b.theta;
    const Eigen::VectorXd s = random_vec(rng, 5);
    for (std::size_t act = 0; act < 4; ++act)
      CHECK(q_value(c, fmap, s, act) ==
            doctest::Approx(0.7 * q_value(a, fmap, s, act) - 1.3 * q_value(b, fmap, s, act)).epsilon(1e-12));
    KalmanState scaled = a;
    scaled.theta *= 3.5;
    Rng r1(1), r2(1);
    CHECK(select_action(a, fmap, s, {0, 1, 2, 3}, 0.0, r1) ==
          select_action(scaled, fmap, s, {0, 1, 2, 3}, 0.0, r2));
  }
}

TEST_CASE("shaped reward") {
  const RewardSpec spec;
  CHECK(shaped_reward(-1.0, 0.0, 0.0, spec) == -1.0);
  CHECK(shaped_reward(-1.0, 0.0, 1.0, spec) == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(shaped_reward(20.0, 0.5, 0.0, spec) == 19.5);
  CHECK_THROWS(shaped_reward(0.0, 1.5, 0.0, spec));
  CHECK_THROWS(shaped_reward(0.0, 0.0, -2.0, spec));
  CHECK(valid_psi(-0.5));
  CHECK_FALSE(valid_psi(0.25));
}

TEST_CASE("social terms telescope at lambda 1") {
  RewardSpec spec;
  spec.lambda = 1.0;
  const std::vector<double> psi{0.5, -1.0, 1.0, 0.0, -0.5, 0.0};  // psi_T = 0
  double social = 0.0;
  for (std::size_t t = 0; t + 1 < psi.size(); ++t) social += shaped_reward(0.0, psi[t], psi[t + 1], spec);
  CHECK(social == doctest::Approx(-psi.front()).epsilon(1e-12));
}

TEST_CASE("infinite observation noise freezes theta") {
  const FeatureMap fmap{3, 2};
  KtdParams params;
  params.pn = 1e12;
  KalmanState k = make_kalman(fmap.dim(), params);
  Transition t;
  t.s = Eigen::VectorXd::Ones(3);
  t.a = 1;
  t.r_env = 20.0;
  const KalmanState next = ktd_q_update(k, fmap, t, RewardSpec{});
  CHECK((next.theta - k.theta).norm() < 1e-6);
}

TEST_CASE("single terminal reward is learned") {
  const FeatureMap fmap{1, 1};
  KalmanState k = make_kalman(1);
  Transition t;
  t.s = Eigen::VectorXd::Ones(1);
  t.a = 0;
  t.r_env = 5.0;
  for (int i = 0; i < 200; ++i) k = ktd_q_update(k, fmap, t, RewardSpec{});
  CHECK(q_value(k, fmap, t.s, 0) == doctest::Approx(5.0).epsilon(0.002));
}

TEST_CASE("episode update composition") {
  const FeatureMap fmap{2, 2};
  const KalmanState k = make_kalman(fmap.dim());
  const KalmanState same = episode_update(k, fmap, {}, RewardSpec{});
  CHECK(same.theta == k.theta);
  CHECK(same.P == k.P);

  Transition t;
  t.s = Eigen::Vector2d(1.0, 0.5);
  t.a = 1;
  t.r_env = -1.0;
  t.psi_t = 0.5;
  t.psi_next = -1.0;
  t.s_next = Eigen::Vector2d(0.0, 1.0);
  t.feasible_next = {0, 1};
  const KalmanState a = episode_update(k, fmap, {t}, RewardSpec{});
  const KalmanState b = ktd_q_update(k, fmap, t, RewardSpec{});
  CHECK(a.theta == b.theta);
  CHECK(a.P == b.P);
}

TEST_CASE("chain MDP converges to the value-iteration solution") {
  const auto qstar = oracle::value_iteration(0.95);
  const auto k = oracle::train_chain(500, 17);
  const auto q = oracle::chain_q(k);
  CHECK(oracle::greedy(q) == oracle::greedy(qstar));
  double err = 0.0;
  for (int s = 0; s < oracle::Chain::states; ++s)
    for (int a = 0; a < oracle::Chain::actions; ++a) err = std::max(err, std::abs(q[s][a] - qstar[s][a]));
  MESSAGE("max |Q - Q*| = " << err);
  CHECK(err <= 0.1);
  // The optimal policy leaves left from the first state only.
  CHECK(oracle::greedy(qstar) == std::array<int, 5>{0, 1, 1, 1, 1});
}

TEST_CASE("shaping with an arbitrary potential keeps the greedy policy") {
  const std::array<double, 5> potential{1.0, -0.5, 0.5, -1.0, 0.0};
  const auto plain = oracle::chain_q(oracle::train_chain(500, 17));
  const auto shaped = oracle::chain_q(oracle::train_chain(500, 17, potential));
  CHECK(oracle::greedy(shaped) == oracle::greedy(plain));
  // Shaped values are offset by the state potential.
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 2; ++a) CHECK(shaped[s][a] == doctest::Approx(plain[s][a] - potential[s]).epsilon(0.02));
}

TEST_CASE("covariance stays symmetric positive definite") {
  const FeatureMap fmap{5, 2};
  KalmanState k = make_kalman(fmap.dim());
  Rng rng(5);
  const RewardSpec spec;
  for (int i = 0; i < 10000; ++i) {
    const int s = static_cast<int>(rng.index(5));
    const int a = static_cast<int>(rng.index(2));
    const auto o = oracle::Chain::step(s, a);
    Transition t;
    t.s = oracle::chain_features(s);
    t.a = static_cast<std::size_t>(a);
    t.r_env = o.reward;
    if (o.next) {
      t.s_next = oracle::chain_features(*o.next);
      t.feasible_next = {0, 1};
    }
    k = ktd_q_update(k, fmap, t, spec);
  }
  CHECK((k.P - k.P.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k.P);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("select_action") {
  const FeatureMap fmap{1, 4};
  KalmanState k = make_kalman(fmap.dim());
  k.theta << 0.1, 0.4, 0.3, 0.9;
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(1);
  Rng rng(9);
  CHECK(select_action(k, fmap, s, {0, 1, 2, 3}, 0.0, rng) == 3);
  CHECK(select_action(k, fmap, s, {0, 1, 2}, 0.0, rng) == 1);

  k.theta.setZero();
  CHECK(select_action(k, fmap, s, {2, 1, 3}, 0.0, rng) == 1);  // ties: lowest index

  std::array<int, 4> counts{};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[select_action(k, fmap, s, {0, 2, 3}, 1.0, rng)];
  CHECK(counts[1] == 0);
  double chi2 = 0.0;
  for (int a : {0, 2, 3}) {
    const double e = draws / 3.0;
    chi2 += (counts[a] - e) * (counts[a] - e) / e;
  }
  CHECK(chi2 < 13.8);  // 2 dof, p = 0.001
  CHECK_THROWS(select_action(k, fmap, s, {}, 0.1, rng));
}

TEST_CASE("epsilon schedule") {
  const EpsilonSchedule e;
  CHECK(e.at(0) == 0.3);
  CHECK(e.at(50) == doctest::Approx(0.175).epsilon(1e-12));
  CHECK(e.at(100) == 0.05);
  CHECK(e.at(1000) == 0.05);
}

TEST_CASE("policy persistence refuses a shape mismatch") {
  const FeatureMap fmap{3, 2};
  KalmanState k = make_kalman(fmap.dim());
  k.theta << 1, 2, 3, 4, 5, 6;
  const auto path = (std::filesystem::temp_directory_path() / "dialearn_policy_test.json").string();
  save_policy(k, fmap, RewardSpec{}, path);
  const KalmanState back = load_policy(path, fmap);
  CHECK(back.theta == k.theta);
  CHECK(back.P == k.P);
  CHECK_THROWS_AS(load_policy(path, FeatureMap{2, 3}), ValidationError);
  std::filesystem::remove(path);
}
