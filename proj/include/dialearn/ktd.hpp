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


// KTD-Q: the parameters of a linear Q-function are tracked as a random walk
// observed through one-step temporal differences. The max over next actions
// makes the observation nonlinear in the parameters, so the update goes
// through an unscented transform.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dialearn/common.hpp"

namespace dialearn {

struct KtdParams {
  double p0 = 10.0;      // initial covariance scale
  double pv = 1e-3;      // evolution noise
  double pn = 1.0;       // observation noise
  double kappa = 0.0;    // sigma-point spread
  double gamma = 0.95;   // RL discount
};

struct KalmanState {
  Eigen::VectorXd theta;
  Eigen::MatrixXd P;
  double pv = 1e-3;
  double pn = 1.0;
  double kappa = 0.0;
};

KalmanState make_kalman(std::size_t n, const KtdParams& params = {});

// phi(s, a): the state features copied into the block of action a.
struct FeatureMap {
  std::size_t state_dim = 0;
  std::size_t action_count = 0;

  std::size_t dim() const { return state_dim * action_count; }
  Eigen::VectorXd phi(const Eigen::VectorXd& s, std::size_t a) const;
};

struct RewardSpec {
  double turn_penalty = -1.0;
  double success_reward = 20.0;
  double failure_reward = 0.0;
  double lambda = 0.95;
  double gamma = 0.95;
};

inline constexpr double kPsiDomain[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
bool valid_psi(double psi);

struct Transition {
  Eigen::VectorXd s;
  std::size_t a = 0;
  double r_env = 0.0;
  double psi_t = 0.0;
  double psi_next = 0.0;
  std::optional<Eigen::VectorXd> s_next;  // absent on the terminal transition
  std::vector<std::size_t> feasible_next;
};

double q_value(const KalmanState& state, const FeatureMap& fmap, const Eigen::VectorXd& s,
               std::size_t a);

// r_env + lambda * psi_next - psi_t. Throws when a potential is outside
// [-1, 1].
double shaped_reward(double r_env, double psi_t, double psi_next, const RewardSpec& spec);

KalmanState ktd_q_update(const KalmanState& state, const FeatureMap& fmap, const Transition& t,
                         const RewardSpec& spec);

KalmanState episode_update(const KalmanState& state, const FeatureMap& fmap,
                           const std::vector<Transition>& transitions, const RewardSpec& spec);

// Feasible actions by decreasing Q; ties go to the lower index.
std::vector<std::size_t> rank_actions(const KalmanState& state, const FeatureMap& fmap,
                                      const Eigen::VectorXd& s,
                                      const std::vector<std::size_t>& feasible);

std::size_t select_action(const KalmanState& state, const FeatureMap& fmap, const Eigen::VectorXd& s,
                          const std::vector<std::size_t>& feasible, double epsilon, Rng& rng);

struct EpsilonSchedule {
  double start = 0.3;
  double end = 0.05;
  std::size_t decay_dialogues = 100;

  double at(std::size_t dialogue) const;
};

// One versioned file: feature-map shape, theta, P and hyperparameters.
nlohmann::json policy_to_json(const KalmanState& state, const FeatureMap& fmap,
                              const RewardSpec& spec);
// Throws ValidationError when the stored shape differs from `fmap`.
KalmanState policy_from_json(const nlohmann::json& j, const FeatureMap& fmap);
void save_policy(const KalmanState& state, const FeatureMap& fmap, const RewardSpec& spec,
                 const std::string& path);
KalmanState load_policy(const std::string& path, const FeatureMap& fmap);

}  // namespace dialearn
