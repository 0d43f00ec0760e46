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

#include "dialearn/dm.hpp"

#include <algorithm>
#include <array>

namespace dialearn {

namespace {

constexpr std::array<const char*, kAllSummaryActs> kActNames = {
    "Greet", "Bye", "BoldRQ", "TentRQ", "Confirm", "FindAlt", "Split",
    "Repeat", "Offer", "Inform", "QMore", "AskConfirm", "AskAnnotation"};

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

bool said(const ActList& acts, std::string_view type) {
  return std::any_of(acts.begin(), acts.end(), [&](const DialogueAct& a) { return a.acttype == type; });
}

// Split every hypothesis lacking slot=value into a copy that has it (mass
// p*c) and itself (mass p*(1-c)).
std::vector<Hypothesis> add_constraint(const std::vector<Hypothesis>& in, const std::string& slot,
                                       const std::string& value, Grounding g, double c) {
  std::vector<Hypothesis> out;
  for (const auto& h : in) {
    auto it = h.constraints.find(slot);
    if (it != h.constraints.end() && it->second == value) {
      Hypothesis kept = h;
      if (g == Grounding::confirmed) kept.grounding[slot] = Grounding::confirmed;
      out.push_back(std::move(kept));
      continue;
    }
    Hypothesis with = h;
    with.constraints[slot] = value;
    with.grounding[slot] = g;
    with.p = h.p * c;
    out.push_back(std::move(with));
    if (c < 1.0) {
      Hypothesis without = h;
      without.p = h.p * (1.0 - c);
      out.push_back(std::move(without));
    }
  }
  return out;
}

std::vector<Hypothesis> drop_constraint(const std::vector<Hypothesis>& in, const std::string& slot,
                                        const std::string& value, double c) {
  std::vector<Hypothesis> out;
  for (const auto& h : in) {
    auto it = h.constraints.find(slot);
    if (it == h.constraints.end() || it->second != value) {
      out.push_back(h);
      continue;
    }
    Hypothesis without = h;
    without.constraints.erase(slot);
    without.grounding.erase(slot);
    without.p = h.p * c;
    out.push_back(std::move(without));
    if (c < 1.0) {
      Hypothesis kept = h;
      kept.p = h.p * (1.0 - c);
      out.push_back(std::move(kept));
    }
  }
  return out;
}

// Merge equal partitions, prune, cap and renormalize.
void tidy(std::vector<Hypothesis>& hyps, const BeliefParams& params) {
  std::vector<Hypothesis> merged;
  for (auto& h : hyps) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const Hypothesis& m) { return m.constraints == h.constraints; });
    if (it == merged.end()) {
      merged.push_back(std::move(h));
      continue;
    }
    if (h.p > it->p) it->grounding = h.grounding;
    it->p += h.p;
  }
  double total = 0.0;
  for (const auto& h : merged) total += h.p;
  if (total <= 0.0) {
    hyps = {Hypothesis{{}, {}, 1.0}};
    return;
  }
  for (auto& h : merged) h.p /= total;
  std::stable_sort(merged.begin(), merged.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.constraints < b.constraints;
  });
  std::vector<Hypothesis> kept;
  for (auto& h : merged) {
    if (kept.size() >= params.max_hypotheses) break;
    if (h.p < params.prune_below && !kept.empty()) continue;
    kept.push_back(std::move(h));
  }
  total = 0.0;
  for (const auto& h : kept) total += h.p;
  for (auto& h : kept) h.p /= total;
  hyps = std::move(kept);
}

bool entity_matches(const Entity& e, const Hypothesis& h) {
  for (const auto& [slot, value] : h.constraints) {
    auto it = e.attributes.find(slot);
    if (it == e.attributes.end() || it->second != value) return false;
  }
  return true;
}

std::optional<std::pair<std::string, std::string>> pending_confirm(const BeliefState& b) {
  if (!b.last_system_act || b.last_system_act->acttype != "confirm") return std::nullopt;
  for (const auto& p : b.last_system_act->pairs)
    if (p.value) return std::make_pair(p.slot, *p.value);
  return std::nullopt;
}

std::vector<std::string> unconstrained_slots(const BeliefState& b, const Ontology& onto) {
  std::vector<std::string> out;
  for (const auto& s : attribute_slots(onto))
    if (!b.top().constraints.count(s)) out.push_back(s);
  return out;
}

// Highest-mass informed but unconfirmed (slot, value) of the top hypothesis.
std::optional<std::pair<std::string, std::string>> confirm_target(const BeliefState& b,
                                                                  const Ontology& onto) {
  std::optional<std::pair<std::string, std::string>> best;
  double best_mass = -1.0;
  for (const auto& slot : onto.slots) {
    const auto& top = b.top();
    auto it = top.constraints.find(slot);
    if (it == top.constraints.end()) continue;
    auto g = top.grounding.find(slot);
    if (g != top.grounding.end() && g->second == Grounding::confirmed) continue;
    double mass = 0.0;
    for (const auto& h : b.hypotheses) {
      auto hv = h.constraints.find(slot);
      if (hv != h.constraints.end() && hv->second == it->second) mass += h.p;
    }
    if (mass > best_mass) {
      best_mass = mass;
      best = std::make_pair(slot, it->second);
    }
  }
  return best;
}

std::optional<std::pair<std::string, std::pair<std::string, std::string>>> split_target(
    const BeliefState& b, const Ontology& onto) {
  if (b.hypotheses.size() < 2 || b.hypotheses[1].p < 0.1) return std::nullopt;
  const auto& a = b.hypotheses[0].constraints;
  const auto& c = b.hypotheses[1].constraints;
  for (const auto& slot : onto.slots) {
    auto x = a.find(slot), y = c.find(slot);
    if (x != a.end() && y != c.end() && x->second != y->second)
      return std::make_pair(slot, std::make_pair(x->second, y->second));
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(SummaryAct a) { return kActNames[static_cast<std::size_t>(a)]; }

SummaryAct summary_act_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kActNames.size(); ++i)
    if (s == kActNames[i]) return static_cast<SummaryAct>(i);
  throw ParseError("unknown summary act '" + s + "'");
}

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::ZH: return "ZH";
    case Protocol::BH: return "BH";
    case Protocol::BR: return "BR";
    case Protocol::RR: return "RR";
  }
  return "ZH";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "ZH") return Protocol::ZH;
  if (s == "BH") return Protocol::BH;
  if (s == "BR") return Protocol::BR;
  if (s == "RR") return Protocol::RR;
  throw ParseError("unknown protocol '" + s + "'");
}

double BeliefState::mass() const {
  double m = 0.0;
  for (const auto& h : hypotheses) m += h.p;
  return m;
}

std::vector<std::string> attribute_slots(const Ontology& onto) {
  std::vector<std::string> out;
  for (const auto& s : onto.slots)
    if (s != "message") out.push_back(s);
  return out;
}

BeliefState update_belief(const BeliefState& belief, const ActList& user_acts, double confidence,
                          const Ontology& onto, const BeliefParams& params) {
  BeliefState b = belief;
  b.turn += 1;
  b.last_user_acts = user_acts;
  const double c = std::clamp(confidence, 0.0, 1.0);
  const auto slots = attribute_slots(onto);

  if (const auto pending = pending_confirm(belief)) {
    const auto& [slot, value] = *pending;
    if (said(user_acts, "affirm"))
      b.hypotheses = add_constraint(b.hypotheses, slot, value, Grounding::confirmed, c);
    else if (said(user_acts, "negate"))
      b.hypotheses = drop_constraint(b.hypotheses, slot, value, c);
  }
  if (b.offered && (said(user_acts, "negate") || said(user_acts, "reqalts")) &&
      belief.last_system_act && belief.last_system_act->acttype == "offer") {
    b.rejected.push_back(*b.offered);
    b.offered.reset();
  }
  for (const auto& act : user_acts) {
    if (act.acttype != "inform") continue;
    for (const auto& p : act.pairs) {
      if (!p.value || !contains(slots, p.slot)) continue;
      if (onto.slot_of(*p.value) != p.slot) continue;
      b.hypotheses = add_constraint(b.hypotheses, p.slot, *p.value, Grounding::informed, c);
    }
  }
  tidy(b.hypotheses, params);
  return b;
}

void note_system_act(BeliefState& belief, SummaryAct summary, const DialogueAct& act) {
  belief.last_summary_act = summary;
  if (is_ask(summary)) return;
  belief.last_system_act = act;
  if (act.acttype == "offer") {
    for (const auto& p : act.pairs) {
      if (p.slot == kNameSlot && p.value) {
        belief.offered = *p.value;
        belief.offer_history.push_back(*p.value);
      }
    }
  }
  if (act.acttype == "inform") {
    for (const auto& p : act.pairs)
      if (p.slot == "message") belief.message_given = true;
  }
}

std::vector<std::string> match_entities(const BeliefState& belief, const Ontology& onto) {
  std::vector<std::string> out;
  for (const auto& e : onto.entities) {
    if (contains(belief.rejected, e.id)) continue;
    if (entity_matches(e, belief.top())) out.push_back(e.id);
  }
  return out;
}

std::set<SummaryAct> feasible_acts(const BeliefState& b, const Ontology& onto, Protocol protocol) {
  std::set<SummaryAct> f{SummaryAct::Repeat};
  if (b.turn == 0 || said(b.last_user_acts, "hello")) f.insert(SummaryAct::Greet);
  if (b.turn >= 1) f.insert(SummaryAct::Bye);
  if (!unconstrained_slots(b, onto).empty()) {
    f.insert(SummaryAct::BoldRQ);
    f.insert(SummaryAct::TentRQ);
  }
  if (confirm_target(b, onto)) f.insert(SummaryAct::Confirm);
  const auto matches = match_entities(b, onto);
  if (!matches.empty()) f.insert(SummaryAct::Offer);
  if (b.offered) {
    f.insert(SummaryAct::QMore);
    if (contains(matches, *b.offered)) f.insert(SummaryAct::Inform);
  }
  if (!b.offer_history.empty() &&
      std::any_of(matches.begin(), matches.end(),
                  [&](const std::string& id) { return !contains(b.offer_history, id); }))
    f.insert(SummaryAct::FindAlt);
  if (split_target(b, onto)) f.insert(SummaryAct::Split);
  if (protocol == Protocol::RR && b.turn >= 1 &&
      !(b.last_summary_act && is_ask(*b.last_summary_act))) {
    f.insert(SummaryAct::AskConfirm);
    f.insert(SummaryAct::AskAnnotation);
  }
  return f;
}

std::optional<DialogueAct> convert(SummaryAct act, const BeliefState& b, const Ontology& onto) {
  switch (act) {
    case SummaryAct::Greet: return DialogueAct("hello");
    case SummaryAct::Bye: return DialogueAct("bye");
    case SummaryAct::Repeat: return DialogueAct("repeat");
    case SummaryAct::QMore:
      if (!b.offered) return std::nullopt;
      return DialogueAct("reqmore");
    case SummaryAct::TentRQ:
      if (unconstrained_slots(b, onto).empty()) return std::nullopt;
      return DialogueAct("request");
    case SummaryAct::BoldRQ: {
      const auto open = unconstrained_slots(b, onto);
      if (open.empty()) return std::nullopt;
      const auto matches = match_entities(b, onto);
      std::string best = open.front();
      std::size_t best_spread = 0;
      for (const auto& slot : open) {
        std::set<std::string> seen;
        for (const auto& id : matches) {
          const auto& attrs = onto.entity(id)->attributes;
          auto it = attrs.find(slot);
          if (it != attrs.end()) seen.insert(it->second);
        }
        if (seen.size() > best_spread) {
          best_spread = seen.size();
          best = slot;
        }
      }
      return DialogueAct("request", {{best, std::nullopt}});
    }
    case SummaryAct::Confirm: {
      const auto target = confirm_target(b, onto);
      if (!target) return std::nullopt;
      return DialogueAct::with("confirm", target->first, target->second);
    }
    case SummaryAct::Split: {
      const auto target = split_target(b, onto);
      if (!target) return std::nullopt;
      return DialogueAct("select", {{target->first, target->second.first},
                                    {target->first, target->second.second}});
    }
    case SummaryAct::Offer: {
      const auto matches = match_entities(b, onto);
      if (matches.empty()) return std::nullopt;
      const std::string id = b.offered && contains(matches, *b.offered) ? *b.offered : matches.front();
      return DialogueAct::with("offer", std::string(kNameSlot), id);
    }
    case SummaryAct::FindAlt: {
      if (b.offer_history.empty()) return std::nullopt;
      for (const auto& id : match_entities(b, onto))
        if (!contains(b.offer_history, id)) return DialogueAct::with("offer", std::string(kNameSlot), id);
      return std::nullopt;
    }
    case SummaryAct::Inform: {
      if (!b.offered || !contains(match_entities(b, onto), *b.offered)) return std::nullopt;
      const Entity* e = onto.entity(*b.offered);
      DialogueAct out("inform");
      std::size_t extra = 0;
      for (const auto& slot : attribute_slots(onto)) {
        if (extra == 2) break;
        if (b.top().constraints.count(slot)) continue;
        auto it = e->attributes.find(slot);
        if (it == e->attributes.end()) continue;
        out.pairs.push_back({slot, it->second});
        ++extra;
      }
      auto msg = e->attributes.find("message");
      out.pairs.push_back({"message", msg != e->attributes.end() ? msg->second : e->id});
      return out;
    }
    case SummaryAct::AskConfirm:
    case SummaryAct::AskAnnotation:
      return std::nullopt;  // realised by the orchestrator, not as a system utterance
  }
  return std::nullopt;
}

FullAct summary_to_full(const std::vector<SummaryAct>& ranked, const BeliefState& belief,
                        const Ontology& onto) {
  for (SummaryAct a : ranked) {
    if (auto act = convert(a, belief, onto)) return {a, std::move(*act)};
  }
  return {SummaryAct::Repeat, DialogueAct("repeat")};
}

UserActClass classify_user_acts(const ActList& acts) {
  if (acts.empty()) return UserActClass::None;
  if (said(acts, "bye")) return UserActClass::Bye;
  if (said(acts, "negate")) return UserActClass::Negate;
  if (said(acts, "affirm")) return UserActClass::Affirm;
  if (said(acts, "reqalts")) return UserActClass::Reqalts;
  if (said(acts, "request")) return UserActClass::Request;
  if (said(acts, "inform")) return UserActClass::Inform;
  return UserActClass::Other;
}

int match_bin_of(std::size_t matches) {
  if (matches == 0) return 0;
  if (matches == 1) return 1;
  if (matches <= 4) return 2;
  return 3;
}

SummaryState summary_state(const BeliefState& b, const Ontology& onto, std::optional<int> quality_dim,
                           Protocol protocol) {
  SummaryState s;
  s.p_top = b.hypotheses.front().p;
  s.p_second = b.hypotheses.size() > 1 ? b.hypotheses[1].p : 0.0;
  const auto& top = b.top();
  std::size_t confirmed = 0;
  for (const auto& [slot, g] : top.grounding)
    if (g == Grounding::confirmed && top.constraints.count(slot)) ++confirmed;
  s.grounded_frac = top.constraints.empty()
                        ? 0.0
                        : static_cast<double>(confirmed) / static_cast<double>(top.constraints.size());
  s.match_bin = match_bin_of(match_entities(b, onto).size());
  s.constraint_bin = static_cast<int>(std::min<std::size_t>(top.constraints.size(), 3));
  s.last_act = classify_user_acts(b.last_user_acts);
  s.offered = b.offered.has_value();
  if (protocol == Protocol::RR) s.quality_dim = quality_dim.value_or(0);
  return s;
}

std::size_t state_feature_dim(bool with_quality) { return 21 + (with_quality ? 3 : 0); }

Eigen::VectorXd state_features(const SummaryState& s, bool with_quality) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_feature_dim(with_quality)));
  Eigen::Index i = 0;
  x[i++] = 1.0;
  x[i++] = s.p_top;
  x[i++] = s.p_second;
  x[i++] = s.grounded_frac;
  x[i + s.match_bin] = 1.0;
  i += 4;
  x[i + s.constraint_bin] = 1.0;
  i += 4;
  x[i++] = s.offered ? 1.0 : 0.0;
  x[i + static_cast<Eigen::Index>(s.last_act)] = 1.0;
  i += static_cast<Eigen::Index>(kUserActClasses);
  if (with_quality) x[i + s.quality_dim.value_or(0)] = 1.0;
  return x;
}

SummaryAct handcrafted_policy(const SummaryState& s, const std::set<SummaryAct>& f,
                              const HandcraftedParams& params) {
  auto has = [&](SummaryAct a) { return f.count(a) > 0; };
  auto first = [&](std::initializer_list<SummaryAct> prefs) -> std::optional<SummaryAct> {
    for (SummaryAct a : prefs)
      if (has(a)) return a;
    return std::nullopt;
  };
  using SA = SummaryAct;
  const auto last = s.last_act;

  if (has(SA::Greet)) return SA::Greet;
  if (last == UserActClass::Bye && has(SA::Bye)) return SA::Bye;
  if (s.offered && (last == UserActClass::Negate || last == UserActClass::Reqalts))
    if (auto a = first({SA::FindAlt, SA::BoldRQ, SA::TentRQ})) return *a;
  if (s.p_top < params.confirm_below && has(SA::Confirm)) return SA::Confirm;
  if (s.offered && (last == UserActClass::Request || last == UserActClass::Affirm ||
                    last == UserActClass::Other) && has(SA::Inform))
    return SA::Inform;
  if (s.offered && last == UserActClass::Inform && has(SA::QMore) && has(SA::Inform)) return SA::QMore;
  if (s.match_bin == 0)
    if (auto a = first({SA::Split, SA::Confirm, SA::TentRQ})) return *a;
  if (s.match_bin == 3)
    if (auto a = first({SA::BoldRQ, SA::TentRQ})) return *a;
  if ((s.match_bin == 1 || s.match_bin == 2) && !s.offered && has(SA::Offer)) return SA::Offer;
  if (auto a = first({SA::Inform, SA::Offer})) return *a;
  return SA::Repeat;
}

nlohmann::json belief_top_json(const BeliefState& belief) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [slot, value] : belief.top().constraints) j[slot] = value;
  return j;
}

}  // namespace dialearn
