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


// Dialogue sessions under the four protocols, their logs, and training runs.
//
//   ZH  zero-shot parser, handcrafted policy
//   BH  bandit-adapted parser, handcrafted policy
//   BR  bandit-adapted parser, KTD-Q policy
//   RR  KTD-Q policy that also decides when to ask for parser annotations
//
// A Session is a small state machine: start() produces the opening system
// turn, user_turn() either answers or asks for an annotation first, and
// annotation_response() resumes the turn. The same machine backs simulated
// runs and live sessions behind the gateway.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialearn/bandit.hpp"
#include "dialearn/dm.hpp"
#include "dialearn/embeddings.hpp"
#include "dialearn/ktd.hpp"
#include "dialearn/nlg.hpp"
#include "dialearn/ontology.hpp"
#include "dialearn/zssp.hpp"

namespace dialearn {

enum class SpLearning { none, bandit, policy };
enum class DmPolicy { handcrafted, ktd };

struct ProtocolConfig {
  Protocol protocol = Protocol::ZH;
  SpLearning sp_learning = SpLearning::none;
  DmPolicy dm_policy = DmPolicy::handcrafted;
  std::uint64_t seed = 0;
  std::size_t max_system_turns = 20;
  bool record_timestamps = false;
  ParserParams parser;
  BanditParams bandit;
  LossParams loss;
  BeliefParams belief;
  HandcraftedParams handcrafted;
  QualityThresholds quality;
  KtdParams ktd;
  RewardSpec reward;
  EpsilonSchedule epsilon;

  // The only legal (sp_learning, dm_policy) pairing for each protocol.
  static ProtocolConfig make(Protocol p, std::uint64_t seed = 0);
  void check() const;  // throws ValidationError on a broken wiring
};

nlohmann::json config_to_json(const ProtocolConfig& c);
ProtocolConfig config_from_json(const nlohmann::json& j);
ProtocolConfig load_config(const std::string& path);

// Immutable domain resources shared by every session of a run.
struct Resources {
  Ontology onto;
  EmbeddingSpace space;
  TemplateStore templates;
};

// Loads <dir>/<name>.json, <name>_vectors.txt and <name>_templates.json.
Resources load_resources(const std::string& dir, const std::string& name = "fruits");

// Everything learned across dialogues of one run.
struct Learner {
  KnowledgeBase kb;
  Bandit bandit;
  std::optional<KalmanState> policy;
  FeatureMap fmap;
  std::size_t dialogues = 0;  // completed, drives the exploration schedule
  bool learning = true;       // false freezes KB, bandit and policy

  static Learner make(const Resources& res, const ProtocolConfig& config);
};

struct AnnotationRequest {
  AdaptationAction kind = AdaptationAction::AskConfirm;
  std::vector<std::string> words;
  ActList proposed;               // acts of the current best parse
  std::vector<Segment> segments;  // its labelled segments, aligned with `proposed`
};

nlohmann::json request_to_json(const AnnotationRequest& r);
AnnotationRequest request_from_json(const nlohmann::json& j);

struct SystemOutput {
  SummaryAct summary = SummaryAct::Repeat;
  DialogueAct act;
  std::string text;

  bool is_bye() const { return act.acttype == "bye"; }
};

struct UserInput {
  std::string text;
  std::optional<std::string> asr_text;  // text after the noise channel, if any
  std::optional<ActList> oracle;        // intended acts, simulated users only
  bool hangs_up = false;                // the user leaves after this turn
};

struct AdaptationRecord {
  AdaptationAction action = AdaptationAction::Skip;
  std::string source;  // "none", "bandit" or "policy"
  std::optional<double> probability;
  int phi = 0;
  double g = 0.0;
  double l = 0.0;
  bool accepted = false;
  std::size_t updated_cells = 0;
};

// One system step: a realised summary act, or an Ask under RR.
struct StepRecord {
  SummaryAct summary = SummaryAct::Repeat;
  std::string act;                    // rendered full act, empty for Ask steps
  double psi = 0.0;                   // feedback received after this step
  std::optional<double> psi_raw;      // raw human scale, when it came from a person
};

struct TurnRecord {
  std::size_t index = 0;
  std::optional<std::string> user_text;
  std::optional<std::string> asr_text;
  std::optional<std::string> oracle;
  std::vector<std::pair<std::string, double>> nbest;  // first parse: acts, confidence
  std::string final_parse;                            // 1-best after any annotation
  double final_confidence = 0.0;
  std::optional<AdaptationRecord> adaptation;
  std::optional<int> quality_dim;
  std::vector<StepRecord> steps;
  std::string system_act;
  std::string system_text;
  nlohmann::json belief_top = nlohmann::json::object();
  std::optional<std::int64_t> timestamp_ms;
};

inline constexpr int kLogSchemaVersion = 1;

struct DialogueLog {
  std::string id;
  Protocol protocol = Protocol::ZH;
  std::vector<TurnRecord> turns;
  std::optional<bool> success;  // set once the dialogue has ended
  double cumulative_reward = 0.0;
  std::string end_reason;
  nlohmann::json survey;
  bool message_given = false;

  std::size_t system_steps() const;
};

nlohmann::json log_to_json(const DialogueLog& log);
DialogueLog log_from_json(const nlohmann::json& j);
std::vector<DialogueLog> load_logs(const std::string& path);  // JSONL
void append_log(const DialogueLog& log, const std::string& path);

// f = (1 - l) * 2 - 1
double ask_feedback_score(double l);

// Environment reward of every step: turn penalty, then the terminal reward.
double cumulative_env_reward(std::size_t steps, bool success, const RewardSpec& spec);

class Session {
 public:
  Session(const Resources& res, const ProtocolConfig& config, Learner& learner, std::string id,
          std::uint64_t seed);

  SystemOutput start();

  struct Response {
    std::optional<AnnotationRequest> request;
    std::optional<SystemOutput> system;
  };

  Response user_turn(const UserInput& input);
  Response annotation_response(const AnnotationOutcome& outcome);

  // Feedback on the latest system step. psi must already be in the potential
  // domain; raw keeps the human scale for the log.
  void social_feedback(double psi, std::optional<double> raw = std::nullopt);

  // Closes the dialogue, applies end-of-dialogue learning, returns the log.
  const DialogueLog& end(bool success, const std::string& reason, nlohmann::json survey = nullptr);
  void attach_survey(nlohmann::json survey) { log_.survey = std::move(survey); }

  bool started() const { return started_; }
  bool ended() const { return ended_; }
  bool awaiting_annotation() const { return pending_.has_value(); }
  std::size_t system_turns() const { return system_turns_; }
  const DialogueLog& log() const { return log_; }
  const BeliefState& belief() const { return belief_; }
  const std::vector<ParseHypothesis>& parses() const { return hyps_; }
  std::set<SummaryAct> feasible() const;

 private:
  struct Step {
    Eigen::VectorXd features;
    std::size_t action;
    double psi_before;
    double psi_after = 0.0;
    std::vector<std::size_t> feasible_next;
  };
  struct Pending {
    AnnotationRequest request;
    AdaptationAction action;
    std::optional<double> probability;
    bool from_policy;
  };

  void parse_current();
  std::size_t apply_outcome(const AnnotationOutcome& outcome);
  AdaptationRecord score_outcome(const AnnotationOutcome& outcome, std::size_t updated,
                                 double confidence_before, std::size_t proposed_before);
  void refresh_belief();
  Response decide();
  SystemOutput realise(const std::vector<SummaryAct>& ranked);
  void record_step(SummaryAct act, const std::set<SummaryAct>& feasible);
  std::optional<std::int64_t> now() const;
  AnnotationRequest make_request(AdaptationAction kind) const;

  const Resources* res_;
  ProtocolConfig config_;
  Learner* learner_;
  Parser parser_;
  Rng rng_;
  BeliefState belief_;
  BeliefState turn_start_belief_;
  std::vector<std::string> words_;
  std::vector<ParseHypothesis> hyps_;
  std::optional<Pending> pending_;
  std::vector<Step> steps_;
  DialogueLog log_;
  TurnRecord current_;
  double last_psi_ = 0.0;
  std::size_t system_turns_ = 0;
  bool started_ = false;
  bool ended_ = false;
};

inline Session::Response run_turn(Session& session, const UserInput& input) {
  return session.user_turn(input);
}

// What a dialogue partner must provide: a simulated user or a person behind
// the gateway.
class UserAgent {
 public:
  virtual ~UserAgent() = default;
  virtual void begin_dialogue(std::uint64_t index) = 0;
  virtual UserInput next_utterance(const SystemOutput& last) = 0;
  virtual AnnotationOutcome answer_annotation(const AnnotationRequest& request) = 0;
  virtual std::optional<double> social_feedback(const SystemOutput& last) = 0;
  virtual bool judge_success(const DialogueLog& log) = 0;
  virtual void end_dialogue(const DialogueLog& /*log*/) {}
};

// Seed and id of the index-th dialogue of a run; gateway sessions use the
// same scheme so live and simulated dialogues line up.
std::uint64_t session_seed(const ProtocolConfig& config, std::uint64_t index);
std::string dialogue_id(const ProtocolConfig& config, std::uint64_t index);

// Drives one complete dialogue. A failure inside the user agent ends the
// dialogue as a failure.
DialogueLog run_dialogue(const Resources& res, const ProtocolConfig& config, Learner& learner,
                         UserAgent& user, std::uint64_t index);

struct RunOptions {
  std::string out_dir;  // empty: keep everything in memory
  std::function<void(const DialogueLog&)> on_dialogue;
};

// n sequential dialogues; with an output directory, logs are appended as they
// finish and the KB, bandit and policy are saved at the end.
std::vector<DialogueLog> run_training(const Resources& res, const ProtocolConfig& config, Learner& learner,
                                      UserAgent& user, std::size_t n, const RunOptions& options = {});

// Frozen replay: no learning, greedy policy.
std::vector<DialogueLog> run_evaluation(const Resources& res, const ProtocolConfig& config,
                                        const Learner& trained, UserAgent& user, std::size_t n,
                                        std::uint64_t first_index = 1000000);

void save_learner(const Learner& learner, const ProtocolConfig& config, const std::string& dir);
Learner load_learner(const Resources& res, const ProtocolConfig& config, const std::string& dir);

}  // namespace dialearn
