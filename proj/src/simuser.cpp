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


#include "dialearn/simuser.hpp"

#include <algorithm>
#include <fstream>

namespace dialearn {

namespace {

bool has_act(const ActList& acts, std::string_view type) {
  return std::any_of(acts.begin(), acts.end(), [&](const DialogueAct& a) { return a.acttype == type; });
}

// Multiset equality of act lists.
bool same_acts(ActList a, ActList b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.index(v.size())];
}

struct Piece {
  std::vector<std::string> words;
  std::optional<Span> span;  // relative to the piece
};

Piece fill(const std::string& tmpl, const std::string& surface) {
  std::string t = tmpl;
  if (auto pos = t.find("$V"); pos != std::string::npos) t.replace(pos, 2, surface);
  Piece p;
  const auto open = t.find('['), close = t.find(']');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    p.words = normalize_words(t);
    return p;
  }
  auto pre = normalize_words(t.substr(0, open));
  auto mid = normalize_words(t.substr(open + 1, close - open - 1));
  auto post = normalize_words(t.substr(close + 1));
  p.span = Span{pre.size(), pre.size() + mid.size()};
  p.words = std::move(pre);
  p.words.insert(p.words.end(), mid.begin(), mid.end());
  p.words.insert(p.words.end(), post.begin(), post.end());
  return p;
}

std::uint64_t dialogue_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string corrupt(const std::string& text, const NoiseModel& noise, Rng& rng) {
  auto words = normalize_words(text);
  for (auto& w : words) {
    auto it = noise.confusions.find(w);
    if (it == noise.confusions.end() || it->second.empty()) continue;
    if (rng.bernoulli(noise.p_corrupt)) w = pick(it->second, rng);
  }
  return join_words(words);
}

UserBank user_bank_from_json(const nlohmann::json& j) {
  UserBank b;
  b.inform = j.at("inform").get<decltype(b.inform)>();
  b.joiners = j.value("joiners", std::vector<std::string>{"and"});
  b.acts = j.at("acts").get<decltype(b.acts)>();
  b.synonyms = j.value("synonyms", decltype(b.synonyms){});
  b.distractors = j.value("distractors", std::vector<std::string>{});
  b.confusions = j.value("confusions", decltype(b.confusions){});
  return b;
}

UserBank load_user_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return user_bank_from_json(j);
}

bool judge_success(const DialogueLog& log, const UserGoal& goal, const Ontology& onto,
                   const SuccessCriteria& criteria) {
  if (!log.message_given || log.end_reason == "cap") return false;
  std::size_t utterances = 0;
  for (const auto& t : log.turns)
    if (!t.system_act.empty()) ++utterances;
  if (utterances > criteria.max_system_turns) return false;
  const Entity* target = onto.entity(goal.entity);
  if (!target) return false;
  for (const auto& t : log.turns) {
    if (t.system_act.find("message=") == std::string::npos) continue;
    std::size_t correct = 0;
    for (const auto& [slot, value] : t.belief_top.items()) {
      auto it = target->attributes.find(slot);
      if (it == target->attributes.end() || it->second != value.get<std::string>()) return false;
      ++correct;
    }
    return correct >= criteria.min_features;
  }
  return false;
}

SimulatedUser::SimulatedUser(const Resources& res, UserBank bank, SimUserParams params)
    : res_(&res), bank_(std::move(bank)), params_(params) {
  noise_.p_corrupt = params_.p_corrupt;
  noise_.confusions = bank_.confusions;
}

UserGoal SimulatedUser::sample_goal(Rng& rng) const {
  const auto& ents = res_->onto.entities;
  if (ents.empty()) throw Error("ontology has no entities");
  const Entity& e = ents[rng.index(ents.size())];
  UserGoal g;
  g.entity = e.id;
  std::vector<std::string> slots;
  for (const auto& s : attribute_slots(res_->onto))
    if (s != "fruit" && e.attributes.count(s)) slots.push_back(s);
  // Fisher-Yates on our own generator.
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.index(i)]);
  const std::size_t span = params_.max_features - params_.min_features + 1;
  const std::size_t n = params_.min_features + rng.index(span);
  if (e.attributes.count("fruit")) g.features_to_mention.emplace_back("fruit", e.attributes.at("fruit"));
  for (const auto& s : slots) {
    if (g.features_to_mention.size() >= n) break;
    g.features_to_mention.emplace_back(s, e.attributes.at(s));
  }
  g.patience = params_.min_patience + rng.index(params_.max_patience - params_.min_patience + 1);
  return g;
}

void SimulatedUser::set_goal(UserGoal goal) {
  goal_ = std::move(goal);
  pending_ = goal_.features_to_mention;
  told_.clear();
  message_received_ = false;
  user_turns_ = 0;
  last_ = {};
  last_intent_.clear();
  system_history_.clear();
}

void SimulatedUser::begin_dialogue(std::uint64_t index) {
  rng_ = Rng(dialogue_seed(params_.seed, index));
  set_goal(sample_goal(rng_));
}

std::optional<std::string> SimulatedUser::true_value(const std::string& slot) const {
  const Entity* e = res_->onto.entity(goal_.entity);
  if (!e) return std::nullopt;
  auto it = e->attributes.find(slot);
  if (it == e->attributes.end() || slot == "message") return std::nullopt;
  return it->second;
}

bool SimulatedUser::consistent(const std::string& entity_id) const {
  const Entity* e = res_->onto.entity(entity_id);
  if (!e) return false;
  for (const auto& [slot, value] : told_) {
    auto it = e->attributes.find(slot);
    if (it == e->attributes.end() || it->second != value) return false;
  }
  return true;
}

ActList SimulatedUser::reveal(std::size_t count) {
  ActList out;
  while (count-- > 0 && !pending_.empty()) {
    const auto [slot, value] = pending_.front();
    pending_.erase(pending_.begin());
    told_[slot] = value;
    out.push_back(DialogueAct::with("inform", slot, value));
  }
  if (out.empty()) out.push_back(DialogueAct("request", {{"message", std::nullopt}}));
  return out;
}

std::string SimulatedUser::phrase_value(const std::string& value, bool& distract, Rng& rng) const {
  double p_distract = 1.0 - params_.p_exact - params_.p_synonym;
  if (params_.curriculum) p_distract *= 0.5 * (1 + level_);
  const double u = rng.uniform();
  const auto lex = res_->onto.value_lex.find(value);
  const std::string exact =
      lex != res_->onto.value_lex.end() && !lex->second.empty() ? lex->second.front() : value;
  if (u < 1.0 - p_distract - params_.p_synonym) return exact;
  if (u < 1.0 - p_distract) {
    auto syn = bank_.synonyms.find(value);
    if (syn != bank_.synonyms.end() && !syn->second.empty()) return pick(syn->second, rng);
    return exact;
  }
  distract = !bank_.distractors.empty();
  return exact;
}

Utterance SimulatedUser::phrase(const ActList& acts, Rng& rng) const {
  std::vector<Piece> pieces;
  bool distract = false;
  bool previous_inform = false;
  for (const auto& act : acts) {
    const bool is_feature = act.acttype == "inform" && act.pairs.size() == 1 && act.pairs[0].value &&
                            bank_.inform.count(act.pairs[0].slot);
    if (is_feature) {
      if (previous_inform && !bank_.joiners.empty()) pieces.push_back(fill(pick(bank_.joiners, rng), ""));
      const auto& slot = act.pairs[0].slot;
      pieces.push_back(fill(pick(bank_.inform.at(slot), rng), phrase_value(*act.pairs[0].value, distract, rng)));
      previous_inform = true;
      continue;
    }
    previous_inform = false;
    auto it = bank_.acts.find(act.str());
    if (it == bank_.acts.end() || it->second.empty()) throw Error("user bank cannot phrase " + act.str());
    pieces.push_back(fill(pick(it->second, rng), ""));
  }
  if (distract) {
    Piece d = fill(pick(bank_.distractors, rng), "");
    if (rng.bernoulli(0.5)) pieces.insert(pieces.begin(), std::move(d));
    else pieces.push_back(std::move(d));
  }
  Utterance u;
  u.oracle = acts;
  std::vector<std::string> words;
  for (const auto& p : pieces) {
    if (p.span) u.spans.push_back({words.size() + p.span->begin, words.size() + p.span->end});
    words.insert(words.end(), p.words.begin(), p.words.end());
  }
  u.text = join_words(words);
  return u;
}

UserInput SimulatedUser::next_utterance(const SystemOutput& last) {
  ++user_turns_;
  const auto& a = last.act;
  const std::size_t per_turn =
      params_.curriculum ? std::min<std::size_t>(static_cast<std::size_t>(level_) + 1, params_.max_per_turn)
                         : params_.max_per_turn;
  auto reveal_some = [&] { return reveal(1 + rng_.index(per_turn)); };
  auto first_value = [&]() -> std::optional<std::pair<std::string, std::string>> {
    for (const auto& p : a.pairs)
      if (p.value) return std::make_pair(p.slot, *p.value);
    return std::nullopt;
  };
  auto answer_slot = [&](const std::string& slot) -> ActList {
    const auto tv = true_value(slot);
    if (!tv) return reveal_some();
    told_[slot] = *tv;
    pending_.erase(std::remove_if(pending_.begin(), pending_.end(),
                                  [&](const auto& f) { return f.first == slot; }),
                   pending_.end());
    return {DialogueAct::with("inform", slot, *tv)};
  };

  ActList intent;
  if (user_turns_ > goal_.patience || a.acttype == "bye") {
    intent = {DialogueAct("bye")};
  } else if (a.acttype == "confirm" && first_value()) {
    const auto [slot, value] = *first_value();
    const auto tv = true_value(slot);
    if (tv && *tv == value) {
      told_[slot] = value;
      intent = {DialogueAct("affirm")};
    } else {
      intent = {DialogueAct("negate")};
      if (tv) {
        auto fix = answer_slot(slot);
        intent.insert(intent.end(), fix.begin(), fix.end());
      }
    }
  } else if ((a.acttype == "select" || a.acttype == "request") && !a.pairs.empty()) {
    intent = answer_slot(a.pairs.front().slot);
  } else if (a.acttype == "offer" && first_value()) {
    const auto id = first_value()->second;
    if (consistent(id)) {
      intent = pending_.empty() ? ActList{DialogueAct("request", {{"message", std::nullopt}})} : reveal_some();
    } else {
      intent = {DialogueAct("negate")};
      const Entity* e = res_->onto.entity(id);
      std::optional<std::string> wrong;
      for (const auto& [slot, value] : told_) {
        if (!e || !e->attributes.count(slot) || e->attributes.at(slot) != value) {
          wrong = slot;
          break;
        }
      }
      if (wrong) intent.push_back(DialogueAct::with("inform", *wrong, told_.at(*wrong)));
      else intent.push_back(DialogueAct("reqalts"));
    }
  } else if (a.acttype == "inform") {
    const bool has_message = std::any_of(a.pairs.begin(), a.pairs.end(),
                                         [](const SlotValue& p) { return p.slot == "message"; });
    if (has_message) {
      message_received_ = true;
      intent = {DialogueAct("thankyou"), DialogueAct("bye")};
    } else {
      intent = pending_.empty() ? ActList{DialogueAct("request", {{"message", std::nullopt}})} : reveal_some();
    }
  } else if (a.acttype == "reqmore") {
    intent = message_received_ ? ActList{DialogueAct("thankyou"), DialogueAct("bye")}
                               : ActList{DialogueAct("request", {{"message", std::nullopt}})};
  } else if (a.acttype == "repeat" && !last_intent_.empty()) {
    intent = last_intent_;
  } else {
    intent = reveal_some();
  }

  last_intent_ = intent;
  last_ = phrase(intent, rng_);
  UserInput in;
  in.text = last_.text;
  in.asr_text = corrupt(last_.text, noise_, rng_);
  in.oracle = last_.oracle;
  in.hangs_up = has_act(intent, "bye");
  return in;
}

AnnotationOutcome SimulatedUser::answer_annotation(const AnnotationRequest& request) {
  AnnotationOutcome o;
  o.action = request.kind;
  const bool match = same_acts(request.proposed, last_.oracle);
  if (request.kind == AdaptationAction::AskConfirm) {
    ActList remaining = last_.oracle;
    for (const auto& act : request.proposed) {
      auto it = std::find(remaining.begin(), remaining.end(), act);
      o.verdicts.push_back(it != remaining.end());
      if (it != remaining.end()) remaining.erase(it);
    }
    o.accepted = match;
    return o;
  }
  if (request.kind == AdaptationAction::AskAnnotation) {
    if (match) {
      o.accepted = true;
      return o;
    }
    o.spans = last_.spans;
    o.das = last_.oracle;
  }
  return o;
}

std::optional<double> SimulatedUser::social_feedback(const SystemOutput& last) {
  system_history_.push_back(last.summary);
  const double u = rng_.uniform();
  const auto& a = last.act;
  auto value_of = [&](const std::string& slot) -> std::optional<std::string> {
    for (const auto& p : a.pairs)
      if (p.slot == slot && p.value) return *p.value;
    return std::nullopt;
  };

  std::optional<double> negative, positive;
  const std::size_t n = system_history_.size();
  if (n >= 3 && system_history_[n - 1] == system_history_[n - 2] && system_history_[n - 2] == system_history_[n - 3])
    negative = -1.0;
  if (a.acttype == "offer") {
    const auto id = value_of(std::string(kNameSlot));
    const Entity* e = id ? res_->onto.entity(*id) : nullptr;
    bool shares = false;
    for (const auto& [slot, value] : told_) {
      if (e && e->attributes.count(slot) && e->attributes.at(slot) == value) shares = true;
    }
    if (!shares) negative = -1.0;
    else if (id && consistent(*id)) positive = 0.5;
  }
  if (a.acttype == "confirm" && !a.pairs.empty() && a.pairs[0].value) {
    const auto tv = true_value(a.pairs[0].slot);
    if (tv && *tv == *a.pairs[0].value) positive = 0.5;
    else if (!negative) negative = -0.5;
  }
  if (a.acttype == "inform" && value_of("message")) {
    bool on_target = true;
    for (const auto& p : a.pairs) {
      if (p.slot == "message" || !p.value) continue;
      const auto tv = true_value(p.slot);
      if (!tv || *tv != *p.value) on_target = false;
    }
    if (on_target) positive = 1.0;
  }
  if (negative) return u < params_.p_negative ? negative : std::nullopt;
  if (positive) return u < params_.p_positive ? positive : std::nullopt;
  return std::nullopt;
}

bool SimulatedUser::judge_success(const DialogueLog& log) {
  return dialearn::judge_success(log, goal_, res_->onto);
}

void SimulatedUser::end_dialogue(const DialogueLog& log) {
  recent_success_.push_back(log.success.value_or(false));
  if (!params_.curriculum || recent_success_.size() < 10) return;
  const auto first = recent_success_.end() - 10;
  const double rate = static_cast<double>(std::count(first, recent_success_.end(), true)) / 10.0;
  if (rate > 0.6) level_ = std::min(level_ + 1, 2);
  else if (rate < 0.3) level_ = std::max(level_ - 1, 0);
}

}  // namespace dialearn
