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

// Dialogue manager: flat-hypothesis belief tracking, summary state and
// summary acts, feasibility, summary->full act mapping and the handcrafted
// baseline policy.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dialearn/ontology.hpp"

namespace dialearn {

enum class SummaryAct {
  Greet,
  Bye,
  BoldRQ,
  TentRQ,
  Confirm,
  FindAlt,
  Split,
  Repeat,
  Offer,
  Inform,
  QMore,
  AskConfirm,     // parser-annotation acts, only under the merged protocol
  AskAnnotation,
};
inline constexpr std::size_t kDialogueSummaryActs = 11;
inline constexpr std::size_t kAllSummaryActs = 13;

const char* to_string(SummaryAct a);
SummaryAct summary_act_from_string(const std::string& s);
inline bool is_ask(SummaryAct a) { return a == SummaryAct::AskConfirm || a == SummaryAct::AskAnnotation; }

enum class Protocol { ZH, BH, BR, RR };
const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

enum class Grounding { informed, confirmed };

struct Hypothesis {
  std::map<std::string, std::string> constraints;  // slot -> value
  std::map<std::string, Grounding> grounding;
  double p = 0.0;
};

struct BeliefState {
  std::vector<Hypothesis> hypotheses{Hypothesis{{}, {}, 1.0}};  // most probable first
  int turn = 0;
  std::optional<std::string> offered;
  std::vector<std::string> rejected;  // offers the user turned down
  std::vector<std::string> offer_history;
  ActList last_user_acts;
  std::optional<DialogueAct> last_system_act;
  std::optional<SummaryAct> last_summary_act;
  bool message_given = false;

  const Hypothesis& top() const { return hypotheses.front(); }
  double mass() const;
};

struct BeliefParams {
  double prune_below = 1e-3;
  std::size_t max_hypotheses = 16;
};

// Folds one user turn (the 1-best acts at the given parse confidence) into the
// belief. Always advances the turn counter.
BeliefState update_belief(const BeliefState& belief, const ActList& user_acts, double confidence,
                          const Ontology& onto, const BeliefParams& params = {});

// Records what the system just said (offer, message delivery, pending confirm).
void note_system_act(BeliefState& belief, SummaryAct summary, const DialogueAct& act);

// Entities compatible with every constraint of the top hypothesis, excluding
// rejected offers.
std::vector<std::string> match_entities(const BeliefState& belief, const Ontology& onto);

// Attribute slots a user can describe (every ontology slot except the message).
std::vector<std::string> attribute_slots(const Ontology& onto);

std::set<SummaryAct> feasible_acts(const BeliefState& belief, const Ontology& onto,
                                   Protocol protocol);

struct FullAct {
  SummaryAct used;  // the summary act actually realised after fallback
  DialogueAct act;
};

// Tries `ranked` in order (the requested act first) and realises the first act
// that converts; repeat() always converts.
FullAct summary_to_full(const std::vector<SummaryAct>& ranked, const BeliefState& belief,
                        const Ontology& onto);
std::optional<DialogueAct> convert(SummaryAct act, const BeliefState& belief, const Ontology& onto);

enum class UserActClass { None, Inform, Affirm, Negate, Request, Reqalts, Bye, Other };
inline constexpr std::size_t kUserActClasses = 8;
UserActClass classify_user_acts(const ActList& acts);

struct SummaryState {
  double p_top = 1.0;
  double p_second = 0.0;
  double grounded_frac = 0.0;
  int match_bin = 3;       // 0 / 1 / 2-4 / >=5 matching entities
  int constraint_bin = 0;  // 0 / 1 / 2 / >=3 constrained slots in the top hypothesis
  UserActClass last_act = UserActClass::None;
  bool offered = false;
  std::optional<int> quality_dim;  // merged protocol only

  bool operator==(const SummaryState&) const = default;
};

int match_bin_of(std::size_t matches);

SummaryState summary_state(const BeliefState& belief, const Ontology& onto,
                           std::optional<int> quality_dim, Protocol protocol);

// Feature vector for the linear Q-function: bias, probabilities, one-hot bins.
std::size_t state_feature_dim(bool with_quality);
Eigen::VectorXd state_features(const SummaryState& s, bool with_quality);

struct HandcraftedParams {
  double confirm_below = 0.7;
};

SummaryAct handcrafted_policy(const SummaryState& s, const std::set<SummaryAct>& feasible,
                              const HandcraftedParams& params = {});

nlohmann::json belief_top_json(const BeliefState& belief);

}  // namespace dialearn
