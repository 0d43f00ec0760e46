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
#include "dialearn/dm.hpp"
#include "dialearn/nlg.hpp"

using namespace dialearn;

namespace {

const std::string kDomains = DIALEARN_DOMAINS_DIR;

const Ontology& onto() {
  static const Ontology o = load_ontology(kDomains + "/fruits.json");
  return o;
}

const TemplateStore& store() {
  static const TemplateStore s = load_templates(kDomains + "/fruits_templates.json");
  return s;
}

}  // namespace

TEST_CASE("base templates") {
  Rng rng(0);
  CHECK(render(DialogueAct::with("inform", "fruit", "apple"), store(), onto(), rng) == "Right, that's an apple");
  Rng r2(0);
  CHECK(render(DialogueAct("bye"), store(), onto(), r2) == "Goodbye, and thanks for the chat!");
  CHECK(render(DialogueAct("bye"), store(), onto(), r2) == "Goodbye, and thanks for the chat!");
}

TEST_CASE("the three-pair inform pattern") {
  Rng rng(0);
  const auto act = parse_da("inform(fruit=apple,seems=upside_down,possesses=eyes)")[0];
  CHECK(render(act, store(), onto(), rng) == "That apple with eyes seems rather upside down");
}

TEST_CASE("composition through a combination rule") {
  Rng rng(1);
  const auto act = parse_da("inform(color=red,size=big)")[0];
  const std::string text = render(act, store(), onto(), rng);
  CHECK(text.find("red") != std::string::npos);
  CHECK(text.find("big") != std::string::npos);
  CHECK(text.find('$') == std::string::npos);
}

TEST_CASE("uncoverable acts name the pattern") {
  Rng rng(0);
  CHECK_THROWS_WITH_AS(render(DialogueAct("dance"), store(), onto(), rng), doctest::Contains("dance"),
                       GenerationError);
}

TEST_CASE("rendering is deterministic under a seed") {
  const auto act = parse_da("inform(color=red,size=big,shape=round)")[0];
  Rng a(7), b(7);
  for (int i = 0; i < 50; ++i) CHECK(render(act, store(), onto(), a) == render(act, store(), onto(), b));
}

TEST_CASE("expansion counts") {
  CHECK(expand_count(TemplateStore{}) == 0);

  TemplateStore toy;
  toy.fragments["inform"]["a"] = {"x $A"};
  toy.fragments["inform"]["b"] = {"y $A"};
  toy.rules.push_back({"inform", 2, {{0, 1}, {1, 0}, {0, 1}}, {"$1 then $2", "$1 and $2"}});
  // One slot pairing (a, b) x 3 orders x 2 frames x 1 x 1 fragment variants.
  CHECK(expand_count(toy) == 6);

  const auto n = expand_count(store());
  MESSAGE("bundled store expands to " << n << " forms");
  CHECK(n > 1000);
}

TEST_CASE("every act the dialogue manager produces renders") {
  Rng rng(13);
  const auto& o = onto();
  for (int trial = 0; trial < 400; ++trial) {
    BeliefState b;
    const std::size_t k = rng.index(4);
    for (std::size_t i = 0; i < k; ++i) {
      const auto slots = attribute_slots(o);
      const auto& slot = slots[rng.index(slots.size())];
      const auto& vals = o.values.at(slot);
      b = update_belief(b, {DialogueAct::with("inform", slot, vals[rng.index(vals.size())])}, rng.uniform(), o);
    }
    const auto matches = match_entities(b, o);
    if (!matches.empty() && rng.bernoulli(0.6)) {
      b.offered = matches[rng.index(matches.size())];
      b.offer_history.push_back(*b.offered);
    }
    for (std::size_t a = 0; a < kDialogueSummaryActs; ++a) {
      const auto act = convert(static_cast<SummaryAct>(a), b, o);
      if (!act) continue;
      INFO(act->str());
      CHECK_NOTHROW(render(*act, store(), o, rng));
    }
  }
}
