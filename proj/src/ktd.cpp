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


#include "dialearn/ktd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dialearn {

namespace {

constexpr int kPolicyFormatVersion = 1;

Eigen::MatrixXd sqrt_covariance(Eigen::MatrixXd& P, double scale) {
  Eigen::LLT<Eigen::MatrixXd> llt(scale * P);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  P.diagonal().array() += 1e-8;
  llt.compute(scale * P);
  if (llt.info() != Eigen::Success) throw Error("KTD covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

KalmanState make_kalman(std::size_t n, const KtdParams& params) {
  const auto m = static_cast<Eigen::Index>(n);
  KalmanState k;
  k.theta = Eigen::VectorXd::Zero(m);
  k.P = params.p0 * Eigen::MatrixXd::Identity(m, m);
  k.pv = params.pv;
  k.pn = params.pn;
  k.kappa = params.kappa;
  return k;
}

Eigen::VectorXd FeatureMap::phi(const Eigen::VectorXd& s, std::size_t a) const {
  if (a >= action_count) throw Error("action index out of range");
  if (static_cast<std::size_t>(s.size()) != state_dim) throw Error("state feature size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
  out.segment(static_cast<Eigen::Index>(a * state_dim), static_cast<Eigen::Index>(state_dim)) = s;
  return out;
}

bool valid_psi(double psi) {
  return std::any_of(std::begin(kPsiDomain), std::end(kPsiDomain), [&](double v) { return v == psi; });
}

double q_value(const KalmanState& state, const FeatureMap& fmap, const Eigen::VectorXd& s,
               std::size_t a) {
  if (a >= fmap.action_count) throw Error("action index out of range");
  return state.theta
      .segment(static_cast<Eigen::Index>(a * fmap.state_dim), static_cast<Eigen::Index>(fmap.state_dim))
      .dot(s);
}

double shaped_reward(double r_env, double psi_t, double psi_next, const RewardSpec& spec) {
  // Feedback channels snap to the five-point set; the score of an Ask turn is
  // continuous, so only the range is enforced here.
  if (!(std::abs(psi_t) <= 1.0) || !(std::abs(psi_next) <= 1.0))
    throw Error("social potential outside [-1, 1]");
  return r_env + spec.lambda * psi_next - psi_t;
}

KalmanState ktd_q_update(const KalmanState& state, const FeatureMap& fmap, const Transition& t,
                         const RewardSpec& spec) {
  const auto n = static_cast<Eigen::Index>(fmap.dim());
  if (state.theta.size() != n) throw Error("KTD state does not match the feature map");
  const auto sd = static_cast<Eigen::Index>(fmap.state_dim);
  const double r = shaped_reward(t.r_env, t.psi_t, t.psi_next, spec);

  KalmanState out = state;
  out.P.diagonal().array() += state.pv;
  const double spread = static_cast<double>(n) + state.kappa;
  const Eigen::MatrixXd L = sqrt_covariance(out.P, spread);

  // Sigma point j (and its mirror) is theta +/- L.col(j); the Q-values along
  // each are the centre value plus/minus the projection of the column.
  auto project = [&](const Eigen::VectorXd& s, std::size_t a) -> std::pair<double, Eigen::VectorXd> {
    const auto off = static_cast<Eigen::Index>(a) * sd;
    return {state.theta.segment(off, sd).dot(s), L.middleRows(off, sd).transpose() * s};
  };
  const auto [q0, dq] = project(t.s, t.a);

  Eigen::VectorXd g_plus = Eigen::VectorXd::Constant(n, q0) + dq;
  Eigen::VectorXd g_minus = Eigen::VectorXd::Constant(n, q0) - dq;
  double g_centre = q0;
  if (t.s_next && !t.feasible_next.empty()) {
    Eigen::VectorXd best_plus = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd best_minus = best_plus;
    double best_centre = -std::numeric_limits<double>::infinity();
    for (std::size_t a : t.feasible_next) {
      const auto [qn, dqn] = project(*t.s_next, a);
      best_plus = best_plus.cwiseMax(Eigen::VectorXd::Constant(n, qn) + dqn);
      best_minus = best_minus.cwiseMax(Eigen::VectorXd::Constant(n, qn) - dqn);
      best_centre = std::max(best_centre, qn);
    }
    g_plus -= spec.gamma * best_plus;
    g_minus -= spec.gamma * best_minus;
    g_centre -= spec.gamma * best_centre;
  }

  const double w0 = state.kappa / spread;
  const double w = 1.0 / (2.0 * spread);
  const double r_hat = w0 * g_centre + w * (g_plus.sum() + g_minus.sum());
  const Eigen::VectorXd dp = g_plus.array() - r_hat;
  const Eigen::VectorXd dm = g_minus.array() - r_hat;
  const double p_r = w0 * (g_centre - r_hat) * (g_centre - r_hat) + w * (dp.squaredNorm() + dm.squaredNorm());
  const Eigen::VectorXd p_theta_r = w * (L * (dp - dm));
  const double innovation = p_r + state.pn;
  const Eigen::VectorXd K = p_theta_r / innovation;

  out.theta += K * (r - r_hat);
  out.P -= innovation * K * K.transpose();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  return out;
}

KalmanState episode_update(const KalmanState& state, const FeatureMap& fmap,
                           const std::vector<Transition>& transitions, const RewardSpec& spec) {
  KalmanState k = state;
  for (const auto& t : transitions) k = ktd_q_update(k, fmap, t, spec);
  return k;
}

std::vector<std::size_t> rank_actions(const KalmanState& state, const FeatureMap& fmap,
                                      const Eigen::VectorXd& s,
                                      const std::vector<std::size_t>& feasible) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t a : feasible) scored.emplace_back(q_value(state, fmap, s, a), a);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<std::size_t> out;
  for (const auto& [q, a] : scored) out.push_back(a);
  return out;
}

std::size_t select_action(const KalmanState& state, const FeatureMap& fmap, const Eigen::VectorXd& s,
                          const std::vector<std::size_t>& feasible, double epsilon, Rng& rng) {
  if (feasible.empty()) throw Error("no feasible action");
  // Always consume one draw so the stream does not depend on Q-values.
  const double u = rng.uniform();
  if (u < epsilon) return feasible[rng.index(feasible.size())];
  return rank_actions(state, fmap, s, feasible).front();
}

double EpsilonSchedule::at(std::size_t dialogue) const {
  if (decay_dialogues == 0 || dialogue >= decay_dialogues) return end;
  const double frac = static_cast<double>(dialogue) / static_cast<double>(decay_dialogues);
  return start + (end - start) * frac;
}

nlohmann::json policy_to_json(const KalmanState& state, const FeatureMap& fmap,
                              const RewardSpec& spec) {
  nlohmann::json j;
  j["format"] = "dialearn-policy";
  j["version"] = kPolicyFormatVersion;
  j["state_dim"] = fmap.state_dim;
  j["action_count"] = fmap.action_count;
  j["theta"] = std::vector<double>(state.theta.data(), state.theta.data() + state.theta.size());
  std::vector<double> p(static_cast<std::size_t>(state.P.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      p.data(), state.P.rows(), state.P.cols()) = state.P;
  j["P"] = std::move(p);
  j["pv"] = state.pv;
  j["pn"] = state.pn;
  j["kappa"] = state.kappa;
  j["reward"] = {{"turn_penalty", spec.turn_penalty}, {"success_reward", spec.success_reward},
                 {"failure_reward", spec.failure_reward}, {"lambda", spec.lambda},
                 {"gamma", spec.gamma}};
  return j;
}

KalmanState policy_from_json(const nlohmann::json& j, const FeatureMap& fmap) {
  if (j.value("format", std::string()) != "dialearn-policy")
    throw ValidationError("not a policy file");
  if (j.at("version").get<int>() != kPolicyFormatVersion)
    throw ValidationError("unsupported policy version " + j.at("version").dump());
  const auto sd = j.at("state_dim").get<std::size_t>();
  const auto ac = j.at("action_count").get<std::size_t>();
  if (sd != fmap.state_dim || ac != fmap.action_count)
    throw ValidationError("policy shape " + std::to_string(sd) + "x" + std::to_string(ac) +
                          " does not match " + std::to_string(fmap.state_dim) + "x" +
                          std::to_string(fmap.action_count));
  const auto n = static_cast<Eigen::Index>(fmap.dim());
  const auto theta = j.at("theta").get<std::vector<double>>();
  const auto p = j.at("P").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(theta.size()) != n || static_cast<Eigen::Index>(p.size()) != n * n)
    throw ValidationError("policy arrays have the wrong length");
  KalmanState k;
  k.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), n);
  k.P = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.data(), n, n);
  k.pv = j.at("pv").get<double>();
  k.pn = j.at("pn").get<double>();
  k.kappa = j.at("kappa").get<double>();
  return k;
}

void save_policy(const KalmanState& state, const FeatureMap& fmap, const RewardSpec& spec,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << policy_to_json(state, fmap, spec).dump() << '\n';
}

KalmanState load_policy(const std::string& path, const FeatureMap& fmap) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return policy_from_json(j, fmap);
}

}  // namespace dialearn
