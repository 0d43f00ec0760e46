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


// Template-based surface generation.
//
// A base pattern such as `inform(fruit=$A)` or `request(color)` lists surface
// variants; `*` as a slot matches any slot. Acts with several pairs that no
// base pattern covers are composed by a combination rule: the pairs are
// rendered with per-slot fragments, put in one of the rule's orders and
// joined through one of its frames ($1, $2, ... name the ordered fragments).

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialearn/common.hpp"
#include "dialearn/ontology.hpp"

namespace dialearn {

class GenerationError : public Error {
 public:
  using Error::Error;
};

struct PatternElement {
  std::string slot;                   // "*" matches any slot
  std::optional<char> placeholder;    // 'A', 'B', ...; absent for bare slots
};

struct TemplatePattern {
  std::string acttype;
  std::vector<PatternElement> elements;
};

TemplatePattern parse_pattern(const std::string& text);

struct CombinationRule {
  std::string acttype;
  std::size_t arity = 0;
  std::vector<std::vector<std::size_t>> orders;  // permutations of pair positions
  std::vector<std::string> frames;
};

struct TemplateStore {
  std::map<std::string, std::vector<std::string>> base;
  std::map<std::string, std::map<std::string, std::vector<std::string>>> fragments;  // act -> slot -> variants
  std::vector<CombinationRule> rules;
};

TemplateStore templates_from_json(const nlohmann::json& j);
TemplateStore load_templates(const std::string& path);

// Throws GenerationError naming the act when nothing covers it.
std::string render(const DialogueAct& act, const TemplateStore& store, const Ontology& onto, Rng& rng);

// Number of distinct composed forms: every base variant plus, for each rule,
// every slot combination its fragments allow times orders, frames and
// fragment variants.
std::size_t expand_count(const TemplateStore& store);

}  // namespace dialearn
