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

// Per-turn choice of the parser adaptation action, scored by
//
//     l = gamma * g + (1 - gamma) * min(phi, phi_max) / phi_max
//
// where g is the system gain term and phi the user effort (exchange count).

#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialearn/common.hpp"
#include "dialearn/ontology.hpp"
#include "dialearn/zssp.hpp"

namespace dialearn {

enum class AdaptationAction { Skip = 0, AskConfirm = 1, AskAnnotation = 2 };
inline constexpr std::size_t kAdaptationArms = 3;

const char* to_string(AdaptationAction a);
AdaptationAction adaptation_from_string(const std::string& s);

// What the user answered to an adaptation request.
struct AnnotationOutcome {
  AdaptationAction action = AdaptationAction::Skip;
  bool accepted = false;        // whole proposal accepted at once
  std::vector<bool> verdicts;   // AskConfirm: one yes/no per act of the 1-best
  std::vector<Span> spans;      // AskAnnotation: selected chunk boundaries
  ActList das;                  // AskAnnotation: one act per span

  bool operator==(const AnnotationOutcome&) const = default;
};

nlohmann::json outcome_to_json(const AnnotationOutcome& o);
AnnotationOutcome outcome_from_json(const nlohmann::json& j);

// Questions needed to specify one act: its type, then a slot and a value when
// the act carries them.
int interim_questions(const DialogueAct& act);

int effort(const AnnotationOutcome& outcome);

// Inputs the gain terms need besides the outcome itself.
struct GainInputs {
  double confidence = 0.0;        // of the 1-best parse
  std::size_t proposed_acts = 0;  // acts in the 1-best
  std::size_t updated_cells = 0;  // knowledge-base cells changed by the feedback
};

double gain(const AnnotationOutcome& outcome, const GainInputs& in);

struct LossParams {
  double gamma = 0.5;
  int phi_max = 20;
};

double loss(double g, int phi, const LossParams& params = {});

struct BanditParams {
  double eta = 0.3;
  double mixing = 0.1;
  std::uint64_t seed = 0;
};

struct BanditChoice {
  AdaptationAction action;
  double probability;
};

// EXP3 with a uniform exploration floor.
class Bandit {
 public:
  explicit Bandit(BanditParams params = {});

  std::array<double, kAdaptationArms> probabilities() const;
  BanditChoice choose();
  void update(AdaptationAction action, double l, double probability);

  const std::array<double, kAdaptationArms>& weights() const { return weights_; }
  const BanditParams& params() const { return params_; }

  nlohmann::json to_json() const;
  static Bandit from_json(const nlohmann::json& j);

 private:
  BanditParams params_;
  std::array<double, kAdaptationArms> weights_{1.0, 1.0, 1.0};
  Rng rng_;
  std::uint64_t draws_ = 0;
};

}  // namespace dialearn
