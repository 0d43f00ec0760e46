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

// Domain semantics and the dialogue-act algebra shared by every module.

#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialearn/common.hpp"

namespace dialearn {

// Pseudo-slot naming a database entity, e.g. offer(name=e7). It is not one of
// the ontology's slots.
inline constexpr std::string_view kNameSlot = "name";

struct SlotValue {
  std::string slot;
  std::optional<std::string> value;  // absent for request-style pairs

  auto operator<=>(const SlotValue&) const = default;
};

struct DialogueAct {
  std::string acttype;
  std::vector<SlotValue> pairs;

  DialogueAct() = default;
  explicit DialogueAct(std::string type, std::vector<SlotValue> p = {})
      : acttype(std::move(type)), pairs(std::move(p)) {}

  // Convenience for the common single-pair inform/confirm shape.
  static DialogueAct with(std::string type, std::string slot, std::string value) {
    return DialogueAct(std::move(type), {{std::move(slot), std::move(value)}});
  }

  std::string str() const;
  auto operator<=>(const DialogueAct&) const = default;
};

using ActList = std::vector<DialogueAct>;

struct Concept {
  std::string acttype;
  std::string slot;
  std::string value;

  auto operator<=>(const Concept&) const = default;
};

struct Entity {
  std::string id;
  std::map<std::string, std::string> attributes;
  std::string message;
};

class Ontology {
 public:
  std::vector<std::string> act_types;
  std::vector<std::string> slots;
  std::map<std::string, std::vector<std::string>> values;  // slot -> values
  std::map<std::string, std::vector<std::string>> value_lex;
  std::map<std::string, std::vector<std::string>> slot_lex;
  std::vector<Entity> entities;

  // Rebuilds lookup indexes and checks every cross-reference. Throws
  // ValidationError naming the offending symbol.
  void validate();

  bool has_act(std::string_view act) const;
  bool has_slot(std::string_view slot) const;
  // Slot owning `value`, if any.
  std::optional<std::string> slot_of(std::string_view value) const;
  std::size_t value_count() const;
  const Entity* entity(std::string_view id) const;
  // First surface string for a value (falls back to the identifier).
  std::string surface(std::string_view value) const;

 private:
  std::map<std::string, std::string, std::less<>> value_slot_;
  std::map<std::string, std::size_t, std::less<>> entity_index_;
};

Ontology load_ontology(const std::string& path);
Ontology ontology_from_json(const nlohmann::json& j);
nlohmann::json ontology_to_json(const Ontology& onto);
void save_ontology(const Ontology& onto, const std::string& path);

// Canonical dialogue-act syntax: `acttype(slot=value,slot,...)`, acts separated by
// commas at the top level. Whitespace is ignored. With an ontology the act types
// are checked too.
ActList parse_da(std::string_view text, const Ontology* onto = nullptr);
std::string render_da(const ActList& acts);

// One concept per (act, slot, value) triple; pairless acts count once.
std::vector<Concept> concepts_of(const ActList& acts);
std::size_t count_concepts(const ActList& acts);

nlohmann::json act_to_json(const DialogueAct& act);

}  // namespace dialearn
