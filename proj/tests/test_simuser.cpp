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


#include "doctest.h"
#include "dialearn/simuser.hpp"

using namespace dialearn;

namespace {

const Resources& res() {
  static const Resources r = load_resources(DIALEARN_DOMAINS_DIR);
  return r;
}

const UserBank& bank() {
  static const UserBank b = load_user_bank(std::string(DIALEARN_DOMAINS_DIR) + "/fruits_user.json");
  return b;
}

SimUserParams plain() {
  SimUserParams p;
  p.p_corrupt = 0.0;
  p.p_exact = 1.0;
  p.p_synonym = 0.0;
  return p;
}

const Entity& entity_with(const std::string& slot, const std::string& value) {
  for (const auto& e : res().onto.entities)
    if (e.attributes.at(slot) == value) return e;
  throw Error("no entity");
}

SystemOutput sys(SummaryAct summary, const std::string& act) {
  SystemOutput o;
  o.summary = summary;
  o.act = parse_da(act)[0];
  return o;
}

UserGoal goal_for(const Entity& e, std::vector<std::string> slots) {
  UserGoal g;
  g.entity = e.id;
  for (const auto& s : slots) g.features_to_mention.emplace_back(s, e.attributes.at(s));
  return g;
}

bool contains_act(const ActList& acts, const std::string& type) {
  return std::any_of(acts.begin(), acts.end(), [&](const DialogueAct& a) { return a.acttype == type; });
}

}  // namespace

TEST_CASE("greeting reveals a pending feature") {
  SimulatedUser u(res(), bank(), plain());
  u.begin_dialogue(0);
  const Entity& e = entity_with("fruit", "apple");
  u.set_goal(goal_for(e, {"fruit"}));
  const auto in = u.next_utterance(sys(SummaryAct::Greet, "hello()"));
  CHECK(in.text.find("apple") != std::string::npos);
  REQUIRE(in.oracle);
  CHECK(*in.oracle == ActList{DialogueAct::with("inform", "fruit", "apple")});
}

TEST_CASE("a wrong confirmation is negated and corrected") {
  SimulatedUser u(res(), bank(), plain());
  u.begin_dialogue(0);
  u.set_goal(goal_for(entity_with("fruit", "apple"), {"fruit", "color"}));
  const auto in = u.next_utterance(sys(SummaryAct::Confirm, "confirm(fruit=lemon)"));
  REQUIRE(in.oracle);
  CHECK(in.oracle->at(0) == DialogueAct("negate"));
  CHECK(in.oracle->at(1) == DialogueAct::with("inform", "fruit", "apple"));

  const auto yes = u.next_utterance(sys(SummaryAct::Confirm, "confirm(fruit=apple)"));
  CHECK(*yes.oracle == ActList{DialogueAct("affirm")});
}

TEST_CASE("empty agenda: ask for the message, then leave") {
  SimulatedUser u(res(), bank(), plain());
  u.begin_dialogue(0);
  const Entity& e = entity_with("fruit", "pear");
  u.set_goal(goal_for(e, {"fruit"}));
  u.next_utterance(sys(SummaryAct::Greet, "hello()"));
  const auto ask = u.next_utterance(sys(SummaryAct::Offer, "offer(name=" + e.id + ")"));
  CHECK(*ask.oracle == ActList{DialogueAct("request", {{"message", std::nullopt}})});
  const auto done = u.next_utterance(sys(SummaryAct::Inform, "inform(message=" + e.attributes.at("message") + ")"));
  CHECK(contains_act(*done.oracle, "bye"));
  CHECK(done.hangs_up);
  const auto again = u.next_utterance(sys(SummaryAct::QMore, "reqmore()"));
  CHECK(contains_act(*again.oracle, "bye"));
}

TEST_CASE("corruption") {
  Rng rng(1);
  NoiseModel none;
  none.confusions = bank().confusions;
  CHECK(corrupt("i see a red apple", none, rng) == "i see a red apple");

  NoiseModel all;
  all.p_corrupt = 1.0;
  all.confusions = {{"red", {"read"}}, {"apple", {"chapel"}}};
  CHECK(corrupt("red apple red", all, rng) == "read chapel read");

  NoiseModel tenth;
  tenth.p_corrupt = 0.1;
  tenth.confusions = {{"red", {"read"}}};
  std::string text;
  for (int i = 0; i < 10000; ++i) text += "red ";
  const auto out = normalize_words(corrupt(text, tenth, rng));
  const auto changed = std::count(out.begin(), out.end(), "read");
  CHECK(changed >= 900);
  CHECK(changed <= 1100);
}

TEST_CASE("oracle annotation answers") {
  SimUserParams p = plain();
  p.max_per_turn = 1;
  SimulatedUser u(res(), bank(), p);
  u.begin_dialogue(0);
  const Entity& e = entity_with("fruit", "apple");
  u.set_goal(goal_for(e, {"fruit", "color", "size"}));
  u.next_utterance(sys(SummaryAct::Greet, "hello()"));
  const ActList oracle = u.last_utterance().oracle;

  AnnotationRequest r;
  r.kind = AdaptationAction::AskConfirm;
  r.proposed = oracle;
  auto o = u.answer_annotation(r);
  CHECK(o.accepted);
  CHECK(effort(o) == 1);

  r.proposed = {oracle[0], DialogueAct::with("inform", "color", "blue"), DialogueAct("affirm")};
  o = u.answer_annotation(r);
  CHECK_FALSE(o.accepted);
  CHECK(o.verdicts == std::vector<bool>{true, false, false});
  CHECK(effort(o) == 4);

  // Two concepts at once, then ask for a full annotation of a wrong parse.
  SimUserParams two = plain();
  two.max_per_turn = 2;
  SimulatedUser v(res(), bank(), two);
  for (std::uint64_t i = 0;; ++i) {
    v.begin_dialogue(i);
    v.set_goal(goal_for(e, {"fruit", "color", "size"}));
    v.next_utterance(sys(SummaryAct::Greet, "hello()"));
    if (v.last_utterance().oracle.size() == 2) break;
  }
  r.kind = AdaptationAction::AskAnnotation;
  r.proposed = {};
  o = v.answer_annotation(r);
  CHECK_FALSE(o.accepted);
  CHECK(o.spans.size() == 2);
  CHECK(o.das == v.last_utterance().oracle);
  const auto words = normalize_words(v.last_utterance().text);
  for (std::size_t i = 0; i < o.spans.size(); ++i) {
    const std::string chunk = join_words(words, o.spans[i].begin, o.spans[i].end);
    CHECK(chunk.find(res().onto.surface(*o.das[i].pairs[0].value)) != std::string::npos);
  }
  CHECK(effort(o) > 1);
}

TEST_CASE("social feedback") {
  SimulatedUser u(res(), bank(), plain());
  u.begin_dialogue(0);
  const Entity& e = entity_with("fruit", "apple");
  u.set_goal(goal_for(e, {"fruit", "color"}));
  CHECK_FALSE(u.social_feedback(sys(SummaryAct::Greet, "hello()")));

  int negatives = 0;
  for (int trial = 0; trial < 200; ++trial) {
    SimulatedUser r(res(), bank(), plain());
    r.begin_dialogue(static_cast<std::uint64_t>(trial));
    r.social_feedback(sys(SummaryAct::Repeat, "repeat()"));
    r.social_feedback(sys(SummaryAct::Repeat, "repeat()"));
    const auto f = r.social_feedback(sys(SummaryAct::Repeat, "repeat()"));
    if (f) {
      CHECK(*f == -1.0);
      ++negatives;
    }
  }
  CHECK(negatives > 160);  // emitted with probability 0.9

  int positives = 0;
  const int n = 2000;
  const std::string inform = "inform(message=" + e.attributes.at("message") + ")";
  for (int trial = 0; trial < n; ++trial) {
    SimulatedUser r(res(), bank(), plain());
    r.begin_dialogue(static_cast<std::uint64_t>(trial));
    r.set_goal(goal_for(e, {"fruit"}));
    const auto f = r.social_feedback(sys(SummaryAct::Inform, inform));
    if (f) {
      CHECK(*f == 1.0);
      ++positives;
    }
  }
  CHECK(positives == doctest::Approx(0.3 * n).epsilon(0.15));
}

namespace {

// Checklist written from scratch: message conveyed, no cap, turn budget, and
// at the moment the message was given the system held at least two features
// and no wrong one.
bool checklist(const DialogueLog& log, const Entity& target) {
  if (!log.message_given) return false;
  if (log.end_reason == "cap") return false;
  const auto said = std::count_if(log.turns.begin(), log.turns.end(),
                                  [](const TurnRecord& t) { return !t.system_act.empty(); });
  if (said > 20) return false;
  auto it = std::find_if(log.turns.begin(), log.turns.end(), [](const TurnRecord& t) {
    return t.system_act.find("message=") != std::string::npos;
  });
  if (it == log.turns.end()) return false;
  int right = 0, wrong = 0;
  for (const auto& [slot, value] : it->belief_top.items())
    (target.attributes.count(slot) && target.attributes.at(slot) == value.get<std::string>() ? right : wrong)++;
  return wrong == 0 && right >= 2;
}

}  // namespace

TEST_CASE("success judgement matches the checklist") {
  const auto& o = res().onto;
  const Entity& e = o.entities[3];
  UserGoal g = goal_for(e, {"fruit", "color"});

  DialogueLog good;
  for (int t = 0; t < 8; ++t) {
    TurnRecord tr;
    tr.system_act = t == 7 ? "inform(message=" + e.attributes.at("message") + ")" : "request(color)";
    tr.belief_top = {{"fruit", e.attributes.at("fruit")}, {"color", e.attributes.at("color")}};
    good.turns.push_back(tr);
  }
  good.message_given = true;
  good.end_reason = "user_end";
  CHECK(judge_success(good, g, o));

  DialogueLog one = good;
  for (auto& t : one.turns) t.belief_top.erase("color");
  CHECK_FALSE(judge_success(one, g, o));

  DialogueLog capped = good;
  capped.end_reason = "cap";
  CHECK_FALSE(judge_success(capped, g, o));

  Rng rng(6);
  const auto slots = attribute_slots(o);
  int successes = 0;
  for (int i = 0; i < 1000; ++i) {
    DialogueLog log;
    const std::size_t turns = 1 + rng.index(24);
    for (std::size_t t = 0; t < turns; ++t) {
      TurnRecord tr;
      const auto k = rng.index(4);
      tr.system_act = k == 0 ? "inform(message=x)" : k == 1 ? "offer(name=e1)" : k == 2 ? "" : "repeat()";
      for (const auto& s : slots) {
        if (!rng.bernoulli(0.4)) continue;
        const auto& vals = o.values.at(s);
        tr.belief_top[s] = rng.bernoulli(0.8) ? e.attributes.at(s) : vals[rng.index(vals.size())];
      }
      log.turns.push_back(tr);
    }
    log.message_given = rng.bernoulli(0.7);
    log.end_reason = rng.bernoulli(0.2) ? "cap" : "user_end";
    const bool expect = checklist(log, e);
    successes += expect;
    CHECK(judge_success(log, g, o) == expect);
  }
  CHECK(successes > 20);
}

TEST_CASE("seeded determinism") {
  SimUserParams p;
  p.seed = 5;
  SimulatedUser a(res(), bank(), p), b(res(), bank(), p);
  for (std::uint64_t d = 0; d < 5; ++d) {
    a.begin_dialogue(d);
    b.begin_dialogue(d);
    CHECK(a.goal().entity == b.goal().entity);
    SystemOutput s = sys(SummaryAct::Greet, "hello()");
    for (int t = 0; t < 6; ++t) {
      const auto x = a.next_utterance(s);
      const auto y = b.next_utterance(s);
      CHECK(x.text == y.text);
      CHECK(x.asr_text == y.asr_text);
      s = sys(SummaryAct::TentRQ, "request()");
    }
  }
}

TEST_CASE("sampled goals are entity features") {
  SimulatedUser u(res(), bank(), SimUserParams{});
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const UserGoal g = u.sample_goal(rng);
    const Entity* e = res().onto.entity(g.entity);
    REQUIRE(e);
    CHECK(g.features_to_mention.size() >= 3);
    CHECK(g.features_to_mention.size() <= 4);
    for (const auto& [slot, value] : g.features_to_mention) CHECK(e->attributes.at(slot) == value);
    CHECK(g.patience <= 20);
  }
}
