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


#include "dialearn/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace dialearn {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ParserParams, max_chunk_len, k, null_log_penalty, nbest,
                                                max_acts_per_chunk, conf_scale, conf_offset,
                                                exploratory_weight)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BanditParams, eta, mixing, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossParams, gamma, phi_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BeliefParams, prune_below, max_hypotheses)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HandcraftedParams, confirm_below)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(QualityThresholds, clear_confidence_max, clear_fertility_max,
                                                clear_known_min, clear_gap_min, average_fertility_max,
                                                average_known_min, average_gap_min)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(KtdParams, p0, pv, pn, kappa, gamma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RewardSpec, turn_penalty, success_reward, failure_reward,
                                                lambda, gamma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EpsilonSchedule, start, end, decay_dialogues)

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (index + 0x632BE59BD9B4E019ULL));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const char* to_string(SpLearning s) {
  switch (s) {
    case SpLearning::none: return "none";
    case SpLearning::bandit: return "bandit";
    case SpLearning::policy: return "policy";
  }
  return "none";
}

const char* to_string(DmPolicy d) { return d == DmPolicy::ktd ? "ktd" : "handcrafted"; }

nlohmann::json adaptation_to_json(const AdaptationRecord& a) {
  nlohmann::json j = {{"action", to_string(a.action)}, {"source", a.source}, {"phi", a.phi},
                      {"g", a.g}, {"l", a.l}, {"accepted", a.accepted},
                      {"updated_cells", a.updated_cells}};
  j["probability"] = a.probability ? nlohmann::json(*a.probability) : nlohmann::json(nullptr);
  return j;
}

AdaptationRecord adaptation_from_json(const nlohmann::json& j) {
  AdaptationRecord a;
  a.action = adaptation_from_string(j.at("action").get<std::string>());
  a.source = j.at("source").get<std::string>();
  if (!j.at("probability").is_null()) a.probability = j.at("probability").get<double>();
  a.phi = j.at("phi").get<int>();
  a.g = j.at("g").get<double>();
  a.l = j.at("l").get<double>();
  a.accepted = j.at("accepted").get<bool>();
  a.updated_cells = j.at("updated_cells").get<std::size_t>();
  return a;
}

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

nlohmann::json turn_to_json(const TurnRecord& t) {
  nlohmann::json j;
  j["index"] = t.index;
  j["user_text"] = opt(t.user_text);
  j["asr_text"] = opt(t.asr_text);
  j["oracle"] = opt(t.oracle);
  auto nbest = nlohmann::json::array();
  for (const auto& [acts, conf] : t.nbest) nbest.push_back({acts, conf});
  j["nbest"] = std::move(nbest);
  j["final_parse"] = t.final_parse;
  j["final_confidence"] = t.final_confidence;
  j["adaptation"] = t.adaptation ? adaptation_to_json(*t.adaptation) : nlohmann::json(nullptr);
  j["quality_dim"] = opt(t.quality_dim);
  auto steps = nlohmann::json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"summary", to_string(s.summary)}, {"act", s.act}, {"psi", s.psi}, {"psi_raw", opt(s.psi_raw)}});
  j["steps"] = std::move(steps);
  j["system_act"] = t.system_act;
  j["system_text"] = t.system_text;
  j["belief_top"] = t.belief_top;
  if (t.timestamp_ms) j["timestamp_ms"] = *t.timestamp_ms;
  return j;
}

TurnRecord turn_from_json(const nlohmann::json& j) {
  TurnRecord t;
  t.index = j.at("index").get<std::size_t>();
  t.user_text = get_opt<std::string>(j, "user_text");
  t.asr_text = get_opt<std::string>(j, "asr_text");
  t.oracle = get_opt<std::string>(j, "oracle");
  for (const auto& n : j.at("nbest")) t.nbest.emplace_back(n.at(0).get<std::string>(), n.at(1).get<double>());
  t.final_parse = j.at("final_parse").get<std::string>();
  t.final_confidence = j.at("final_confidence").get<double>();
  if (!j.at("adaptation").is_null()) t.adaptation = adaptation_from_json(j.at("adaptation"));
  t.quality_dim = get_opt<int>(j, "quality_dim");
  for (const auto& s : j.at("steps")) {
    StepRecord r;
    r.summary = summary_act_from_string(s.at("summary").get<std::string>());
    r.act = s.at("act").get<std::string>();
    r.psi = s.at("psi").get<double>();
    r.psi_raw = get_opt<double>(s, "psi_raw");
    t.steps.push_back(std::move(r));
  }
  t.system_act = j.at("system_act").get<std::string>();
  t.system_text = j.at("system_text").get<std::string>();
  t.belief_top = j.at("belief_top");
  t.timestamp_ms = get_opt<std::int64_t>(j, "timestamp_ms");
  return t;
}

std::vector<Segment> labelled_segments(const ParseHypothesis& h) {
  std::vector<Segment> out;
  for (const auto& s : h.segmentation)
    if (s.act) out.push_back(s);
  return out;
}

std::string render_nbest(const ActList& acts) { return render_da(acts); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ProtocolConfig ProtocolConfig::make(Protocol p, std::uint64_t seed) {
  ProtocolConfig c;
  c.protocol = p;
  c.seed = seed;
  c.bandit.seed = mix_seed(seed, 17);
  switch (p) {
    case Protocol::ZH: c.sp_learning = SpLearning::none; c.dm_policy = DmPolicy::handcrafted; break;
    case Protocol::BH: c.sp_learning = SpLearning::bandit; c.dm_policy = DmPolicy::handcrafted; break;
    case Protocol::BR: c.sp_learning = SpLearning::bandit; c.dm_policy = DmPolicy::ktd; break;
    case Protocol::RR: c.sp_learning = SpLearning::policy; c.dm_policy = DmPolicy::ktd; break;
  }
  return c;
}

void ProtocolConfig::check() const {
  const auto expected = make(protocol);
  if (sp_learning != expected.sp_learning || dm_policy != expected.dm_policy)
    throw ValidationError(std::string("protocol ") + to_string(protocol) + " requires sp_learning=" +
                          to_string(expected.sp_learning) + " and dm_policy=" + to_string(expected.dm_policy));
  if (max_system_turns == 0) throw ValidationError("max_system_turns must be positive");
}

nlohmann::json config_to_json(const ProtocolConfig& c) {
  return {{"protocol", to_string(c.protocol)},
          {"sp_learning", to_string(c.sp_learning)},
          {"dm_policy", to_string(c.dm_policy)},
          {"seed", c.seed},
          {"max_system_turns", c.max_system_turns},
          {"record_timestamps", c.record_timestamps},
          {"parser", c.parser},
          {"bandit", c.bandit},
          {"loss", c.loss},
          {"belief", c.belief},
          {"handcrafted", c.handcrafted},
          {"quality", c.quality},
          {"ktd", c.ktd},
          {"reward", c.reward},
          {"epsilon", c.epsilon}};
}

ProtocolConfig config_from_json(const nlohmann::json& j) {
  auto c = ProtocolConfig::make(protocol_from_string(j.at("protocol").get<std::string>()),
                                j.value("seed", std::uint64_t{0}));
  if (j.contains("sp_learning") && j.at("sp_learning") != to_string(c.sp_learning))
    throw ValidationError("sp_learning does not match protocol " + std::string(to_string(c.protocol)));
  if (j.contains("dm_policy") && j.at("dm_policy") != to_string(c.dm_policy))
    throw ValidationError("dm_policy does not match protocol " + std::string(to_string(c.protocol)));
  c.max_system_turns = j.value("max_system_turns", c.max_system_turns);
  c.record_timestamps = j.value("record_timestamps", c.record_timestamps);
  if (j.contains("parser")) c.parser = j.at("parser").get<ParserParams>();
  if (j.contains("bandit")) c.bandit = j.at("bandit").get<BanditParams>();
  if (j.contains("loss")) c.loss = j.at("loss").get<LossParams>();
  if (j.contains("belief")) c.belief = j.at("belief").get<BeliefParams>();
  if (j.contains("handcrafted")) c.handcrafted = j.at("handcrafted").get<HandcraftedParams>();
  if (j.contains("quality")) c.quality = j.at("quality").get<QualityThresholds>();
  if (j.contains("ktd")) c.ktd = j.at("ktd").get<KtdParams>();
  if (j.contains("reward")) c.reward = j.at("reward").get<RewardSpec>();
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<EpsilonSchedule>();
  c.check();
  return c;
}

ProtocolConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j);
}

Resources load_resources(const std::string& dir, const std::string& name) {
  const std::filesystem::path base(dir);
  Resources r;
  r.onto = load_ontology((base / (name + ".json")).string());
  r.space = load_embeddings((base / (name + "_vectors.txt")).string());
  r.templates = load_templates((base / (name + "_templates.json")).string());
  return r;
}

Learner Learner::make(const Resources& res, const ProtocolConfig& config) {
  Learner l;
  l.kb = seed_from_ontology(res.onto);
  l.bandit = Bandit(config.bandit);
  const bool rr = config.protocol == Protocol::RR;
  l.fmap = FeatureMap{state_feature_dim(rr), rr ? kAllSummaryActs : kDialogueSummaryActs};
  if (config.dm_policy == DmPolicy::ktd) l.policy = make_kalman(l.fmap.dim(), config.ktd);
  return l;
}

// ---------------------------------------------------------------------------
// Messages and logs

nlohmann::json request_to_json(const AnnotationRequest& r) {
  auto segs = nlohmann::json::array();
  for (const auto& s : r.segments)
    segs.push_back({{"begin", s.begin}, {"end", s.end}, {"chunk", s.chunk},
                    {"act", s.act ? s.act->str() : std::string()}});
  return {{"kind", to_string(r.kind)}, {"words", r.words}, {"proposed", render_da(r.proposed)},
          {"segments", std::move(segs)}};
}

AnnotationRequest request_from_json(const nlohmann::json& j) {
  AnnotationRequest r;
  r.kind = adaptation_from_string(j.at("kind").get<std::string>());
  r.words = j.at("words").get<std::vector<std::string>>();
  r.proposed = parse_da(j.at("proposed").get<std::string>());
  for (const auto& s : j.at("segments")) {
    Segment seg;
    seg.begin = s.at("begin").get<std::size_t>();
    seg.end = s.at("end").get<std::size_t>();
    seg.chunk = s.at("chunk").get<std::string>();
    const auto act = s.at("act").get<std::string>();
    if (!act.empty()) seg.act = parse_da(act).at(0);
    r.segments.push_back(std::move(seg));
  }
  return r;
}

std::size_t DialogueLog::system_steps() const {
  std::size_t n = 0;
  for (const auto& t : turns) n += t.steps.size();
  return n;
}

nlohmann::json log_to_json(const DialogueLog& log) {
  nlohmann::json j;
  j["schema"] = kLogSchemaVersion;
  j["id"] = log.id;
  j["protocol"] = to_string(log.protocol);
  j["success"] = opt(log.success);
  j["cumulative_reward"] = log.cumulative_reward;
  j["end_reason"] = log.end_reason;
  j["message_given"] = log.message_given;
  j["survey"] = log.survey;
  auto turns = nlohmann::json::array();
  for (const auto& t : log.turns) turns.push_back(turn_to_json(t));
  j["turns"] = std::move(turns);
  return j;
}

DialogueLog log_from_json(const nlohmann::json& j) {
  if (j.at("schema").get<int>() != kLogSchemaVersion)
    throw ValidationError("unsupported log schema " + j.at("schema").dump());
  DialogueLog log;
  log.id = j.at("id").get<std::string>();
  log.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  log.success = get_opt<bool>(j, "success");
  log.cumulative_reward = j.at("cumulative_reward").get<double>();
  log.end_reason = j.at("end_reason").get<std::string>();
  log.message_given = j.value("message_given", false);
  log.survey = j.value("survey", nlohmann::json(nullptr));
  for (const auto& t : j.at("turns")) log.turns.push_back(turn_from_json(t));
  return log;
}

std::vector<DialogueLog> load_logs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::vector<DialogueLog> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(log_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), lineno);
    }
  }
  return out;
}

void append_log(const DialogueLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write " + path);
  out << log_to_json(log).dump() << '\n';
}

double ask_feedback_score(double l) { return (1.0 - l) * 2.0 - 1.0; }

double cumulative_env_reward(std::size_t steps, bool success, const RewardSpec& spec) {
  if (steps == 0) return 0.0;
  return static_cast<double>(steps - 1) * spec.turn_penalty +
         (success ? spec.success_reward : spec.failure_reward);
}

// ---------------------------------------------------------------------------
// Session

Session::Session(const Resources& res, const ProtocolConfig& config, Learner& learner, std::string id,
                 std::uint64_t seed)
    : res_(&res), config_(config), learner_(&learner), parser_(res.space, config.parser), rng_(seed) {
  config_.check();
  if (config_.dm_policy == DmPolicy::ktd && !learner_->policy)
    throw ValidationError("KTD protocol without a policy");
  log_.id = std::move(id);
  log_.protocol = config_.protocol;
}

std::optional<std::int64_t> Session::now() const {
  if (!config_.record_timestamps) return std::nullopt;
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::set<SummaryAct> Session::feasible() const {
  return feasible_acts(belief_, res_->onto, config_.protocol);
}

SystemOutput Session::start() {
  if (started_) throw Error("session already started");
  started_ = true;
  current_ = TurnRecord{};
  current_.index = 0;
  current_.timestamp_ms = now();
  auto r = decide();
  if (!r.system) throw Error("opening turn produced no system output");
  return *r.system;
}

AnnotationRequest Session::make_request(AdaptationAction kind) const {
  AnnotationRequest r;
  r.kind = kind;
  r.words = words_;
  r.proposed = hyps_.front().acts;
  r.segments = labelled_segments(hyps_.front());
  return r;
}

void Session::parse_current() { hyps_ = parser_.parse(words_, learner_->kb); }

Session::Response Session::user_turn(const UserInput& input) {
  if (!started_) throw Error("session not started");
  if (ended_) throw Error("session has ended");
  if (pending_) throw Error("an annotation request is still pending");

  current_ = TurnRecord{};
  current_.index = log_.turns.size();
  current_.timestamp_ms = now();
  current_.user_text = input.text;
  current_.asr_text = input.asr_text;
  if (input.oracle) current_.oracle = render_da(*input.oracle);
  turn_start_belief_ = belief_;
  words_ = normalize_words(input.asr_text ? *input.asr_text : input.text);
  parse_current();
  for (const auto& h : hyps_) current_.nbest.emplace_back(render_nbest(h.acts), h.confidence);

  const double conf = hyps_.front().confidence;
  AdaptationRecord skip;
  skip.action = AdaptationAction::Skip;
  skip.g = gain(AnnotationOutcome{}, GainInputs{conf, hyps_.front().acts.size(), 0});
  skip.l = loss(skip.g, 0, config_.loss);

  if (config_.sp_learning == SpLearning::bandit && learner_->learning) {
    const auto choice = learner_->bandit.choose();
    if (choice.action != AdaptationAction::Skip) {
      pending_ = Pending{make_request(choice.action), choice.action, choice.probability, false};
      return {pending_->request, std::nullopt};
    }
    skip.source = "bandit";
    skip.probability = choice.probability;
    learner_->bandit.update(AdaptationAction::Skip, skip.l, choice.probability);
  } else {
    skip.source = config_.sp_learning == SpLearning::policy ? "policy" : "none";
  }
  current_.adaptation = skip;
  refresh_belief();
  return decide();
}

std::size_t Session::apply_outcome(const AnnotationOutcome& o) {
  auto& kb = learner_->kb;
  const auto segs = labelled_segments(hyps_.front());
  const double eps = config_.parser.exploratory_weight;
  std::size_t changed = 0;
  auto judge = [&](const Segment& s, Polarity pol) {
    std::vector<DialogueAct> alternatives;
    if (pol == Polarity::negative) {
      // Plausible: would be preferred to leaving the chunk unlabelled.
      const double floor = std::exp(config_.parser.null_log_penalty);
      for (const auto& c : parser_.score_chunk(kb, normalize_words(s.chunk))) {
        if (c.act == *s.act) continue;
        if (c.score < floor) break;
        alternatives.push_back(c.act);
        if (alternatives.size() == 3) break;
      }
    }
    if (apply_feedback(kb, s.chunk, *s.act, pol, alternatives, eps)) ++changed;
  };
  if (o.accepted) {
    for (const auto& s : segs) judge(s, Polarity::positive);
    return changed;
  }
  if (o.action == AdaptationAction::AskConfirm) {
    if (o.verdicts.size() != segs.size())
      throw ValidationError("expected " + std::to_string(segs.size()) + " verdicts, got " +
                            std::to_string(o.verdicts.size()));
    for (std::size_t i = 0; i < segs.size(); ++i)
      judge(segs[i], o.verdicts[i] ? Polarity::positive : Polarity::negative);
    return changed;
  }
  return apply_annotation(kb, words_, o.spans, o.das);
}

AdaptationRecord Session::score_outcome(const AnnotationOutcome& o, std::size_t updated, double confidence_before,
                                        std::size_t proposed_before) {
  AdaptationRecord r;
  r.action = o.action;
  r.accepted = o.accepted;
  r.updated_cells = updated;
  r.phi = effort(o);
  r.g = gain(o, GainInputs{confidence_before, proposed_before, updated});
  r.l = loss(r.g, r.phi, config_.loss);
  return r;
}

Session::Response Session::annotation_response(const AnnotationOutcome& outcome) {
  if (!pending_) throw Error("annotation response with no pending request");
  if (outcome.action != pending_->action)
    throw ValidationError(std::string("expected a ") + to_string(pending_->action) + " response");
  const Pending pending = *pending_;
  const double conf = hyps_.front().confidence;
  const std::size_t proposed = hyps_.front().acts.size();
  const std::size_t updated = learner_->learning ? apply_outcome(outcome) : 0;
  auto rec = score_outcome(outcome, updated, conf, proposed);
  pending_.reset();

  if (pending.from_policy) {
    rec.source = "policy";
    const double f = ask_feedback_score(rec.l);
    steps_.back().psi_after = f;
    current_.steps.back().psi = f;
  } else {
    rec.source = "bandit";
    rec.probability = pending.probability;
    if (learner_->learning) learner_->bandit.update(pending.action, rec.l, *pending.probability);
  }
  current_.adaptation = rec;
  parse_current();
  refresh_belief();
  return decide();
}

void Session::refresh_belief() {
  const auto& best = hyps_.front();
  const auto asked = belief_.last_summary_act;
  const bool asked_now = !current_.steps.empty() && is_ask(current_.steps.back().summary);
  belief_ = update_belief(turn_start_belief_, best.acts, best.confidence, res_->onto, config_.belief);
  if (asked_now) belief_.last_summary_act = asked;
  current_.final_parse = render_da(best.acts);
  current_.final_confidence = best.confidence;
  if (config_.protocol == Protocol::RR)
    current_.quality_dim = quality_dimension(quality_features(hyps_, learner_->kb, words_.size()), config_.quality);
}

void Session::record_step(SummaryAct act, const std::set<SummaryAct>& feasible) {
  const bool rr = config_.protocol == Protocol::RR;
  const auto ss = summary_state(belief_, res_->onto, current_.quality_dim, config_.protocol);
  Step s;
  s.features = state_features(ss, rr);
  s.action = static_cast<std::size_t>(act);
  s.psi_before = steps_.empty() ? 0.0 : steps_.back().psi_after;
  if (!steps_.empty()) {
    steps_.back().feasible_next.clear();
    for (SummaryAct a : feasible) steps_.back().feasible_next.push_back(static_cast<std::size_t>(a));
  }
  steps_.push_back(std::move(s));
}

Session::Response Session::decide() {
  const auto f = feasible();
  const bool rr = config_.protocol == Protocol::RR;
  const auto ss = summary_state(belief_, res_->onto, current_.quality_dim, config_.protocol);
  std::vector<SummaryAct> ranked;
  if (config_.dm_policy == DmPolicy::handcrafted) {
    ranked = {handcrafted_policy(ss, f, config_.handcrafted), SummaryAct::Repeat};
  } else {
    const auto x = state_features(ss, rr);
    std::vector<std::size_t> idx;
    for (SummaryAct a : f) idx.push_back(static_cast<std::size_t>(a));
    const double eps = learner_->learning ? config_.epsilon.at(learner_->dialogues) : 0.0;
    const auto chosen = select_action(*learner_->policy, learner_->fmap, x, idx, eps, rng_);
    ranked.push_back(static_cast<SummaryAct>(chosen));
    for (std::size_t a : rank_actions(*learner_->policy, learner_->fmap, x, idx))
      if (a != chosen) ranked.push_back(static_cast<SummaryAct>(a));
  }

  if (is_ask(ranked.front())) {
    const SummaryAct ask = ranked.front();
    record_step(ask, f);
    note_system_act(belief_, ask, DialogueAct());
    current_.steps.push_back(StepRecord{ask, "", 0.0, std::nullopt});
    const auto kind = ask == SummaryAct::AskConfirm ? AdaptationAction::AskConfirm : AdaptationAction::AskAnnotation;
    pending_ = Pending{make_request(kind), kind, std::nullopt, true};
    return {pending_->request, std::nullopt};
  }

  std::vector<SummaryAct> dialogue_acts;
  for (SummaryAct a : ranked)
    if (!is_ask(a)) dialogue_acts.push_back(a);
  const FullAct full = summary_to_full(dialogue_acts, belief_, res_->onto);
  record_step(full.used, f);
  std::string text;
  DialogueAct act = full.act;
  SummaryAct used = full.used;
  try {
    text = render(act, res_->templates, res_->onto, rng_);
  } catch (const GenerationError& e) {
    std::clog << "warning: " << e.what() << ", saying repeat()\n";
    act = DialogueAct("repeat");
    used = SummaryAct::Repeat;
    steps_.back().action = static_cast<std::size_t>(used);
    text = render(act, res_->templates, res_->onto, rng_);
  }
  note_system_act(belief_, used, act);
  if (belief_.message_given) log_.message_given = true;
  ++system_turns_;

  current_.steps.push_back(StepRecord{used, act.str(), 0.0, std::nullopt});
  current_.system_act = act.str();
  current_.system_text = text;
  current_.belief_top = belief_top_json(belief_);
  log_.turns.push_back(current_);
  return {std::nullopt, SystemOutput{used, act, text}};
}

void Session::social_feedback(double psi, std::optional<double> raw) {
  if (!valid_psi(psi)) throw ValidationError("social feedback outside {-1,-0.5,0,0.5,1}");
  if (steps_.empty() || log_.turns.empty()) throw Error("no system turn to score");
  if (ended_) throw Error("session has ended");
  steps_.back().psi_after = psi;
  auto& step = log_.turns.back().steps.back();
  step.psi = psi;
  step.psi_raw = raw;
}

const DialogueLog& Session::end(bool success, const std::string& reason, nlohmann::json survey) {
  if (ended_) throw Error("dialogue already ended");
  ended_ = true;
  pending_.reset();
  log_.success = success;
  log_.end_reason = reason;
  log_.survey = std::move(survey);
  log_.cumulative_reward = cumulative_env_reward(steps_.size(), success, config_.reward);

  if (learner_->learning && config_.dm_policy == DmPolicy::ktd && !steps_.empty()) {
    std::vector<Transition> ts;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      const bool last = k + 1 == steps_.size();
      Transition t;
      t.s = steps_[k].features;
      t.a = steps_[k].action;
      t.psi_t = steps_[k].psi_before;
      if (last) {
        t.r_env = success ? config_.reward.success_reward : config_.reward.failure_reward;
        t.psi_next = 0.0;
      } else {
        t.r_env = config_.reward.turn_penalty;
        t.psi_next = steps_[k].psi_after;
        t.s_next = steps_[k + 1].features;
        t.feasible_next = steps_[k].feasible_next;
      }
      ts.push_back(std::move(t));
    }
    learner_->policy = episode_update(*learner_->policy, learner_->fmap, ts, config_.reward);
  }
  if (learner_->learning) ++learner_->dialogues;
  return log_;
}

// ---------------------------------------------------------------------------
// Runs

std::uint64_t session_seed(const ProtocolConfig& config, std::uint64_t index) {
  return mix_seed(config.seed, index);
}

std::string dialogue_id(const ProtocolConfig& config, std::uint64_t index) {
  return std::string(to_string(config.protocol)) + "-" + std::to_string(index);
}

DialogueLog run_dialogue(const Resources& res, const ProtocolConfig& config, Learner& learner, UserAgent& user,
                         std::uint64_t index) {
  Session session(res, config, learner, dialogue_id(config, index), session_seed(config, index));
  std::string reason;
  bool failed = false;
  try {
    user.begin_dialogue(index);
    SystemOutput out = session.start();
    for (;;) {
      if (out.is_bye()) {
        reason = "system_bye";
        break;
      }
      if (session.system_turns() >= config.max_system_turns) {
        reason = "cap";
        break;
      }
      if (auto psi = user.social_feedback(out)) session.social_feedback(*psi);
      const UserInput in = user.next_utterance(out);
      auto resp = session.user_turn(in);
      while (resp.request) resp = session.annotation_response(user.answer_annotation(*resp.request));
      out = *resp.system;
      if (in.hangs_up) {
        reason = "user_bye";
        break;
      }
    }
  } catch (const std::exception& e) {
    std::clog << "dialogue " << index << " aborted: " << e.what() << '\n';
    reason = "error";
    failed = true;
  }
  bool success = false;
  if (!failed && reason != "cap") {
    try {
      success = user.judge_success(session.log());
    } catch (const std::exception& e) {
      std::clog << "dialogue " << index << " could not be judged: " << e.what() << '\n';
    }
  }
  DialogueLog log = session.end(success, reason);
  user.end_dialogue(log);
  return log;
}

std::vector<DialogueLog> run_training(const Resources& res, const ProtocolConfig& config, Learner& learner,
                                      UserAgent& user, std::size_t n, const RunOptions& options) {
  std::vector<DialogueLog> logs;
  std::string log_path;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log_path = (std::filesystem::path(options.out_dir) / "logs.jsonl").string();
    std::ofstream(log_path, std::ios::trunc);
    std::ofstream(std::filesystem::path(options.out_dir) / "config.json") << config_to_json(config).dump(2) << '\n';
  }
  for (std::size_t i = 0; i < n; ++i) {
    logs.push_back(run_dialogue(res, config, learner, user, i));
    if (!log_path.empty()) append_log(logs.back(), log_path);
    if (options.on_dialogue) options.on_dialogue(logs.back());
  }
  if (!options.out_dir.empty()) save_learner(learner, config, options.out_dir);
  return logs;
}

std::vector<DialogueLog> run_evaluation(const Resources& res, const ProtocolConfig& config, const Learner& trained,
                                        UserAgent& user, std::size_t n, std::uint64_t first_index) {
  Learner frozen = trained;
  frozen.learning = false;
  std::vector<DialogueLog> logs;
  for (std::size_t i = 0; i < n; ++i) logs.push_back(run_dialogue(res, config, frozen, user, first_index + i));
  return logs;
}

void save_learner(const Learner& learner, const ProtocolConfig& config, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  save_kb(learner.kb, (base / "kb.jsonl").string());
  std::ofstream(base / "bandit.json") << learner.bandit.to_json().dump() << '\n';
  if (learner.policy) save_policy(*learner.policy, learner.fmap, config.reward, (base / "policy.json").string());
  std::ofstream(base / "learner.json") << nlohmann::json{{"dialogues", learner.dialogues}}.dump() << '\n';
}

Learner load_learner(const Resources& res, const ProtocolConfig& config, const std::string& dir) {
  const std::filesystem::path base(dir);
  Learner l = Learner::make(res, config);
  if (std::filesystem::exists(base / "kb.jsonl")) l.kb = load_kb((base / "kb.jsonl").string());
  if (std::filesystem::exists(base / "bandit.json")) {
    std::ifstream in(base / "bandit.json");
    l.bandit = Bandit::from_json(nlohmann::json::parse(in));
  }
  if (l.policy && std::filesystem::exists(base / "policy.json"))
    l.policy = load_policy((base / "policy.json").string(), l.fmap);
  if (std::filesystem::exists(base / "learner.json")) {
    std::ifstream in(base / "learner.json");
    l.dialogues = nlohmann::json::parse(in).value("dialogues", std::size_t{0});
  }
  return l;
}

}  // namespace dialearn
