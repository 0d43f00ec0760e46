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


// Agenda-based simulated user: describes a target picture feature by
// feature, answers the system truthfully, annotates from its own intended
// acts, sometimes scores system turns, and judges the dialogue at the end.
// Spoken-input errors are imitated by swapping words for confusable ones.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dialearn/common.hpp"
#include "dialearn/orchestrator.hpp"

namespace dialearn {

struct UserGoal {
  std::string entity;
  std::vector<std::pair<std::string, std::string>> features_to_mention;
  std::size_t patience = 20;  // user turns before giving up
  bool wants_message = true;
};

struct NoiseModel {
  double p_corrupt = 0.0;
  std::map<std::string, std::vector<std::string>> confusions;
};

// Each word with a confusion entry is replaced, with probability p_corrupt,
// by one of its confusables. Word count is preserved.
std::string corrupt(const std::string& text, const NoiseModel& noise, Rng& rng);

// Phrasing material. Templates mark the words a user would select when
// annotating with brackets, e.g. "i see a [$V]".
struct UserBank {
  std::map<std::string, std::vector<std::string>> inform;  // slot -> templates
  std::vector<std::string> joiners;
  std::map<std::string, std::vector<std::string>> acts;    // canonical act -> templates
  std::map<std::string, std::vector<std::string>> synonyms;
  std::vector<std::string> distractors;
  std::map<std::string, std::vector<std::string>> confusions;
};

UserBank load_user_bank(const std::string& path);
UserBank user_bank_from_json(const nlohmann::json& j);

struct Utterance {
  std::string text;
  ActList oracle;
  std::vector<Span> spans;  // one per oracle act, over the normalized words
};

struct SimUserParams {
  double p_corrupt = 0.1;
  double p_exact = 0.60;      // phrasing mix: exact / synonym / distractor
  double p_synonym = 0.25;
  std::size_t min_features = 3;
  std::size_t max_features = 4;
  std::size_t max_per_turn = 2;
  std::size_t min_patience = 14;
  std::size_t max_patience = 20;
  double p_negative = 0.9;
  double p_positive = 0.3;
  bool curriculum = false;
  std::uint64_t seed = 0;
};

struct SuccessCriteria {
  std::size_t min_features = 2;
  std::size_t max_system_turns = 20;
};

// Checklist: the message was given, at that point the system's view held at
// least two correct picture features and nothing contradicting the picture,
// and the dialogue stayed within the turn cap.
bool judge_success(const DialogueLog& log, const UserGoal& goal, const Ontology& onto,
                   const SuccessCriteria& criteria = {});

class SimulatedUser : public UserAgent {
 public:
  SimulatedUser(const Resources& res, UserBank bank, SimUserParams params);

  void begin_dialogue(std::uint64_t index) override;
  UserInput next_utterance(const SystemOutput& last) override;
  AnnotationOutcome answer_annotation(const AnnotationRequest& request) override;
  std::optional<double> social_feedback(const SystemOutput& last) override;
  bool judge_success(const DialogueLog& log) override;
  void end_dialogue(const DialogueLog& log) override;

  // Pieces exposed for tests.
  UserGoal sample_goal(Rng& rng) const;
  void set_goal(UserGoal goal);
  const UserGoal& goal() const { return goal_; }
  Utterance phrase(const ActList& acts, Rng& rng) const;
  const Utterance& last_utterance() const { return last_; }
  int complexity() const { return level_; }
  const NoiseModel& noise() const { return noise_; }

 private:
  std::optional<std::string> true_value(const std::string& slot) const;
  ActList reveal(std::size_t count);
  bool consistent(const std::string& entity_id) const;
  std::string phrase_value(const std::string& value, bool& distract, Rng& rng) const;

  const Resources* res_;
  UserBank bank_;
  SimUserParams params_;
  NoiseModel noise_;
  Rng rng_{0};
  UserGoal goal_;
  std::vector<std::pair<std::string, std::string>> pending_;
  std::map<std::string, std::string> told_;  // slot -> value the user has stated
  bool message_received_ = false;
  std::size_t user_turns_ = 0;
  Utterance last_;
  ActList last_intent_;
  std::vector<SummaryAct> system_history_;
  std::vector<bool> recent_success_;
  int level_ = 1;
};

}  // namespace dialearn
