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

#include "dialearn/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace dialearn {

namespace {

bool is_symbol_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
         c == '\'';
}

void check_lex(const std::string& owner, const std::vector<std::string>& surfaces) {
  for (const auto& s : surfaces) {
    if (s.empty()) throw ValidationError("empty lexicalization for '" + owner + "'");
    for (char c : s) {
      if (std::isupper(static_cast<unsigned char>(c)))
        throw ValidationError("lexicalization '" + s + "' of '" + owner + "' is not lowercase");
    }
  }
}

}  // namespace

std::string DialogueAct::str() const { return render_da({*this}); }

void Ontology::validate() {
  if (act_types.empty()) throw ValidationError("ontology declares no act types");
  if (slots.empty()) throw ValidationError("ontology declares no slots");
  value_slot_.clear();
  entity_index_.clear();
  std::set<std::string> slot_set(slots.begin(), slots.end());
  if (slot_set.size() != slots.size()) throw ValidationError("duplicate slot declaration");
  for (const auto& [slot, vals] : values) {
    if (!slot_set.count(slot)) throw ValidationError("values given for undeclared slot '" + slot + "'");
    for (const auto& v : vals) {
      if (!value_slot_.emplace(v, slot).second)
        throw ValidationError("duplicate value '" + v + "'");
    }
  }
  for (const auto& [value, surfaces] : value_lex) {
    if (!value_slot_.count(value))
      throw ValidationError("lexicalization for undeclared value '" + value + "'");
    check_lex(value, surfaces);
  }
  for (const auto& [slot, surfaces] : slot_lex) {
    if (!slot_set.count(slot))
      throw ValidationError("lexicalization for undeclared slot '" + slot + "'");
    check_lex(slot, surfaces);
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& e = entities[i];
    if (e.id.empty()) throw ValidationError("entity without id");
    if (!entity_index_.emplace(e.id, i).second) throw ValidationError("duplicate entity '" + e.id + "'");
    for (const auto& [slot, value] : e.attributes) {
      if (!slot_set.count(slot))
        throw ValidationError("entity '" + e.id + "' uses undeclared slot '" + slot + "'");
      auto it = value_slot_.find(value);
      if (it == value_slot_.end() || it->second != slot)
        throw ValidationError("entity '" + e.id + "' uses undeclared value '" + value + "'");
    }
  }
}

bool Ontology::has_act(std::string_view act) const {
  return std::find(act_types.begin(), act_types.end(), act) != act_types.end();
}

bool Ontology::has_slot(std::string_view slot) const {
  return std::find(slots.begin(), slots.end(), slot) != slots.end();
}

std::optional<std::string> Ontology::slot_of(std::string_view value) const {
  auto it = value_slot_.find(value);
  if (it == value_slot_.end()) return std::nullopt;
  return it->second;
}

std::size_t Ontology::value_count() const {
  std::size_t n = 0;
  for (const auto& [slot, vals] : values) n += vals.size();
  return n;
}

const Entity* Ontology::entity(std::string_view id) const {
  auto it = entity_index_.find(id);
  return it == entity_index_.end() ? nullptr : &entities[it->second];
}

std::string Ontology::surface(std::string_view value) const {
  auto it = value_lex.find(std::string(value));
  if (it != value_lex.end() && !it->second.empty()) return it->second.front();
  std::string s(value);
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

Ontology ontology_from_json(const nlohmann::json& j) {
  Ontology o;
  try {
    o.act_types = j.at("acttypes").get<std::vector<std::string>>();
    o.slots = j.at("slots").get<std::vector<std::string>>();
    for (const auto& [slot, vals] : j.at("values").items()) {
      auto list = vals.get<std::vector<std::string>>();
      std::set<std::string> uniq(list.begin(), list.end());
      if (uniq.size() != list.size()) throw ValidationError("duplicate value under slot '" + slot + "'");
      o.values[slot] = std::move(list);
    }
    if (j.contains("lexicalizations")) {
      const auto& lex = j.at("lexicalizations");
      if (lex.contains("values"))
        o.value_lex = lex.at("values").get<std::map<std::string, std::vector<std::string>>>();
      if (lex.contains("slots"))
        o.slot_lex = lex.at("slots").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (j.contains("entities")) {
      for (const auto& ej : j.at("entities")) {
        Entity e;
        e.id = ej.at("id").get<std::string>();
        e.attributes = ej.at("attributes").get<std::map<std::string, std::string>>();
        e.message = ej.value("message", "");
        o.entities.push_back(std::move(e));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed ontology: ") + ex.what());
  }
  o.validate();
  return o;
}

Ontology load_ontology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ontology file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    // nlohmann reports a byte offset; translate it into a line number.
    std::ifstream again(path);
    std::string content((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
    const auto upto = std::min<std::size_t>(ex.byte, content.size());
    const auto line = 1 + std::count(content.begin(), content.begin() + upto, '\n');
    throw ParseError("malformed ontology file '" + path + "'", static_cast<std::size_t>(line));
  }
  return ontology_from_json(j);
}

nlohmann::json ontology_to_json(const Ontology& onto) {
  nlohmann::json j;
  j["acttypes"] = onto.act_types;
  j["slots"] = onto.slots;
  j["values"] = onto.values;
  j["lexicalizations"] = {{"values", onto.value_lex}, {"slots", onto.slot_lex}};
  auto ents = nlohmann::json::array();
  for (const auto& e : onto.entities)
    ents.push_back({{"id", e.id}, {"attributes", e.attributes}, {"message", e.message}});
  j["entities"] = std::move(ents);
  return j;
}

void save_ontology(const Ontology& onto, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write ontology file '" + path + "'");
  out << ontology_to_json(onto).dump(1) << '\n';
}

// --- dialogue-act syntax -------------------------------------------------

namespace {

class DaParser {
 public:
  DaParser(std::string_view text, const Ontology* onto) : text_(text), onto_(onto) {}

  ActList run() {
    ActList acts;
    skip_ws();
    if (pos_ == text_.size()) return acts;
    while (true) {
      acts.push_back(act());
      skip_ws();
      if (pos_ == text_.size()) break;
      expect(',');
    }
    return acts;
  }

 private:
  DialogueAct act() {
    DialogueAct a;
    a.acttype = symbol("act type");
    if (onto_ && !onto_->has_act(a.acttype)) fail("unknown act type '" + a.acttype + "'");
    expect('(');
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      return a;
    }
    while (true) {
      SlotValue sv;
      sv.slot = symbol("slot");
      skip_ws();
      if (peek() == '=') {
        ++pos_;
        sv.value = symbol("value");
      }
      a.pairs.push_back(std::move(sv));
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return a;
      }
      expect(',');
    }
  }

  std::string symbol(const char* what) {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size() && is_symbol_char(text_[pos_])) ++pos_;
    if (start == pos_) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("dialogue act: " + msg + " at offset " + std::to_string(pos_) + " in '" +
                     std::string(text_) + "'");
  }

  std::string_view text_;
  const Ontology* onto_;
  std::size_t pos_ = 0;
};

}  // namespace

ActList parse_da(std::string_view text, const Ontology* onto) { return DaParser(text, onto).run(); }

std::string render_da(const ActList& acts) {
  std::string out;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (i) out += ", ";
    out += acts[i].acttype;
    out.push_back('(');
    for (std::size_t k = 0; k < acts[i].pairs.size(); ++k) {
      if (k) out.push_back(',');
      out += acts[i].pairs[k].slot;
      if (acts[i].pairs[k].value) {
        out.push_back('=');
        out += *acts[i].pairs[k].value;
      }
    }
    out.push_back(')');
  }
  return out;
}

std::vector<Concept> concepts_of(const ActList& acts) {
  std::vector<Concept> out;
  for (const auto& a : acts) {
    if (a.pairs.empty()) {
      out.push_back({a.acttype, "", ""});
      continue;
    }
    for (const auto& p : a.pairs) out.push_back({a.acttype, p.slot, p.value.value_or("")});
  }
  return out;
}

std::size_t count_concepts(const ActList& acts) {
  std::size_t n = 0;
  for (const auto& a : acts) n += std::max<std::size_t>(a.pairs.size(), 1);
  return n;
}

nlohmann::json act_to_json(const DialogueAct& act) { return act.str(); }

}  // namespace dialearn
