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


#include <cmath>

#include "doctest.h"
#include "dialearn/zssp.hpp"
#include "oracles.hpp"

using namespace dialearn;

namespace {

const std::string kDomains = DIALEARN_DOMAINS_DIR;
const std::string kToy = std::string(DIALEARN_FIXTURES_DIR) + "/toy_vectors.txt";

struct Fruits {
  Ontology onto = load_ontology(kDomains + "/fruits.json");
  EmbeddingSpace space = load_embeddings(kDomains + "/fruits_vectors.txt");
  UserBank bank = load_user_bank(kDomains + "/fruits_user.json");
};

const Fruits& fruits() {
  static const Fruits f;
  return f;
}

bool has_act(const ActList& acts, const DialogueAct& a) {
  return std::find(acts.begin(), acts.end(), a) != acts.end();
}

}  // namespace

TEST_CASE("seeding from the ontology") {
  const auto& f = fruits();
  const KnowledgeBase kb = seed_from_ontology(f.onto);
  const auto* c = kb.get("apple", DialogueAct::with("inform", "fruit", "apple"));
  REQUIRE(c);
  CHECK(c->weight == 1.0);
  CHECK(c->status == CoefStatus::validated);
  CHECK(kb.get("colour", DialogueAct("request", {{"color", std::nullopt}})));
  CHECK(kb.get("genetically modified", DialogueAct::with("inform", "message", "gmo")));

  Ontology bare = f.onto;
  bare.value_lex.clear();
  bare.slot_lex.clear();
  const KnowledgeBase generic = seed_from_ontology(bare);
  std::size_t lex_entries = 0;
  for (const auto& [act, surfaces] : generic_lexicon()) lex_entries += surfaces.size();
  CHECK(generic.size() == lex_entries);
}

TEST_CASE("zero-shot parsing of verbatim mentions") {
  const auto& f = fruits();
  const KnowledgeBase kb = seed_from_ontology(f.onto);
  const Parser parser(f.space);
  auto best = [&](const std::string& text) { return parser.parse(normalize_words(text), kb).front(); };
  CHECK(has_act(best("apple").acts, DialogueAct::with("inform", "fruit", "apple")));
  const auto h = best("i see a red apple with a hat");
  CHECK(has_act(h.acts, DialogueAct::with("inform", "fruit", "apple")));
  CHECK(has_act(h.acts, DialogueAct::with("inform", "color", "red")));
  CHECK(has_act(h.acts, DialogueAct::with("inform", "possesses", "hat")));
  CHECK(has_act(best("it is upside down").acts, DialogueAct::with("inform", "seems", "upside_down")));

  const auto empty = parser.parse({}, kb);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].acts.empty());
  CHECK(empty[0].confidence == 0.0);
}

TEST_CASE("hypotheses are ordered and cover the utterance") {
  const auto& f = fruits();
  const KnowledgeBase kb = seed_from_ontology(f.onto);
  const Parser parser(f.space);
  const auto words = normalize_words("yes it is a big green pear and it looks sad");
  const auto hyps = parser.parse(words, kb);
  REQUIRE(hyps.size() >= 2);
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    CHECK(hyps[i - 1].path_score >= hyps[i].path_score);
    CHECK(hyps[i - 1].confidence >= hyps[i].confidence);
  }
  for (const auto& h : hyps) {
    std::size_t pos = 0;
    for (const auto& s : h.segmentation) {
      CHECK(s.begin == pos);
      CHECK(s.end > s.begin);
      CHECK(s.end - s.begin <= parser.params().max_chunk_len);
      pos = s.end;
    }
    CHECK(pos == words.size());
  }
}

TEST_CASE("synonym chunk on the fixture embedding") {
  const EmbeddingSpace space = load_embeddings(kToy);
  KnowledgeBase kb;
  kb.set("red", DialogueAct::with("inform", "color", "red"), {1.0, CoefStatus::validated});
  kb.set("apple", DialogueAct::with("inform", "fruit", "apple"), {1.0, CoefStatus::validated});
  const Parser parser(space);
  const auto cands = parser.score_chunk(kb, {"crimson"});
  REQUIRE_FALSE(cands.empty());
  CHECK(cands[0].act == DialogueAct::with("inform", "color", "red"));
  CHECK(cands[0].score == doctest::Approx(0.9).epsilon(1e-6));  // cosine 0.9 x weight 1
  const auto h = parser.parse({"crimson"}, kb).front();
  REQUIRE(h.acts.size() == 1);
  CHECK(h.acts[0] == DialogueAct::with("inform", "color", "red"));
  CHECK(h.path_score == doctest::Approx(std::log(0.9)).epsilon(1e-6));
}

TEST_CASE("decoder equals brute-force enumeration") {
  const auto& f = fruits();
  KnowledgeBase kb = seed_from_ontology(f.onto);
  // A few learned multiword entries give competing segmentations.
  kb.set("a red one", DialogueAct::with("inform", "color", "red"), {1.0, CoefStatus::validated});
  kb.set("it looks", DialogueAct::with("inform", "seems", "happy"), {0.3, CoefStatus::exploratory});
  kb.set("big hat", DialogueAct::with("inform", "possesses", "hat"), {1.0, CoefStatus::validated});
  ParserParams params;
  params.max_chunk_len = 3;
  const Parser parser(f.space, params);
  std::vector<std::string> vocab;
  for (const auto& w : {"i", "see", "a", "red", "one", "it", "looks", "big", "hat", "apple", "yes",
                        "crimson", "with", "and", "pear", "very", "sad", "legs", "zzz"})
    vocab.push_back(w);
  Rng rng(2024);
  int unique = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> words;
    const std::size_t n = 1 + rng.index(6);
    for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[rng.index(vocab.size())]);
    const auto dp = parser.parse(words, kb).front();
    const auto bf = oracle::brute_force_decode(parser, kb, words);
    INFO(join_words(words));
    CHECK(dp.path_score == bf.score);
    if (bf.ties == 0) {
      ++unique;
      REQUIRE(dp.segmentation.size() == bf.segments.size());
      for (std::size_t i = 0; i < bf.segments.size(); ++i) {
        CHECK(dp.segmentation[i].begin == bf.segments[i].begin);
        CHECK(dp.segmentation[i].end == bf.segments[i].end);
        CHECK(dp.segmentation[i].act == bf.segments[i].act);
      }
    }
  }
  CHECK(unique > 100);
}

TEST_CASE("feedback") {
  KnowledgeBase kb;
  const auto centre = DialogueAct::with("inform", "area", "centre");
  CHECK(apply_feedback(kb, "downtown", centre, Polarity::positive));
  CHECK(kb.get("downtown", centre)->weight == 1.0);
  CHECK(kb.get("downtown", centre)->status == CoefStatus::validated);

  const auto north = DialogueAct::with("inform", "area", "north");
  apply_feedback(kb, "uptown", north, Polarity::negative);
  CHECK(kb.get("uptown", north)->weight == 0.0);
  apply_feedback(kb, "uptown", north, Polarity::positive);
  CHECK(kb.get("uptown", north)->weight == 1.0);

  // Alternatives become exploratory; validated cells are left alone.
  apply_feedback(kb, "downtown", north, Polarity::negative, {centre, DialogueAct::with("inform", "area", "east")});
  CHECK(kb.get("downtown", centre)->status == CoefStatus::validated);
  CHECK(kb.get("downtown", DialogueAct::with("inform", "area", "east"))->status == CoefStatus::exploratory);
  CHECK(kb.get("downtown", DialogueAct::with("inform", "area", "east"))->weight == 0.3);

  const auto& f = fruits();
  KnowledgeBase seeded = seed_from_ontology(f.onto);
  const auto apple = DialogueAct::with("inform", "fruit", "apple");
  apply_feedback(seeded, "apple", apple, Polarity::negative);
  const Parser parser(f.space);
  CHECK_FALSE(has_act(parser.parse({"apple"}, seeded).front().acts, apple));
  CHECK_THROWS(apply_feedback(seeded, "", apple, Polarity::positive));
}

TEST_CASE("weights stay in range under random feedback") {
  KnowledgeBase kb;
  Rng rng(77);
  const std::vector<std::string> chunks{"a", "b c", "d", "e f g"};
  const ActList acts = parse_da("inform(x=1),inform(x=2),affirm(),bye(),request(y)");
  for (int i = 0; i < 10000; ++i) {
    ActList alts;
    for (const auto& a : acts)
      if (rng.bernoulli(0.3)) alts.push_back(a);
    apply_feedback(kb, chunks[rng.index(chunks.size())], acts[rng.index(acts.size())],
                   rng.bernoulli(0.5) ? Polarity::positive : Polarity::negative, alts, 0.3);
  }
  for (const auto& [chunk, row] : kb.rows())
    for (const auto& [key, cell] : row) {
      CHECK(cell.coef.weight >= 0.0);
      CHECK(cell.coef.weight <= 1.0);
      if (cell.coef.status == CoefStatus::validated) CHECK(cell.coef.weight == 1.0);
      if (cell.coef.status == CoefStatus::invalidated) CHECK(cell.coef.weight == 0.0);
    }
}

TEST_CASE("annotation") {
  KnowledgeBase kb;
  const std::vector<std::string> words{"i", "see", "a", "red", "apple"};
  const auto both = parse_da("inform(fruit=apple,color=red)")[0];
  CHECK(apply_annotation(kb, words, {{3, 5}}, {both}) == 1);
  CHECK(kb.get("red apple", both)->status == CoefStatus::validated);
  const KnowledgeBase before = kb;
  CHECK(apply_annotation(kb, words, {}, {}) == 0);
  CHECK(kb == before);
  CHECK_THROWS(apply_annotation(kb, words, {{0, 1}}, {}));
  CHECK_THROWS(apply_annotation(kb, words, {{0, 2}, {1, 3}}, {both, both}));
  CHECK_THROWS(apply_annotation(kb, words, {{4, 6}}, {both}));

  kb.set("red", DialogueAct::with("inform", "color", "red"), {0.0, CoefStatus::invalidated});
  apply_annotation(kb, words, {{3, 4}}, {DialogueAct::with("inform", "color", "red")});
  CHECK(kb.get("red", DialogueAct::with("inform", "color", "red"))->weight == 1.0);
}

TEST_CASE("knowledge base persistence is deterministic") {
  const auto& f = fruits();
  KnowledgeBase kb = seed_from_ontology(f.onto);
  apply_feedback(kb, "crimson", DialogueAct::with("inform", "color", "red"), Polarity::positive);
  const std::string text = kb_to_jsonl(kb);
  const KnowledgeBase back = kb_from_jsonl(text);
  CHECK(back == kb);
  CHECK(kb_to_jsonl(back) == text);
}

TEST_CASE("adding a validated entry never lowers the 1-best score") {
  const auto& f = fruits();
  KnowledgeBase kb = seed_from_ontology(f.onto);
  const Parser parser(f.space);
  const auto words = normalize_words("it has a funny little nose");
  const double before = parser.parse(words, kb).front().path_score;
  kb.set("funny little nose", DialogueAct::with("inform", "possesses", "mouth"), {1.0, CoefStatus::validated});
  const double after = parser.parse(words, kb).front().path_score;
  CHECK(after >= before);
}

TEST_CASE("quality features") {
  const auto& f = fruits();
  const KnowledgeBase kb = seed_from_ontology(f.onto);
  ParseHypothesis h;
  h.acts = parse_da("inform(fruit=apple,color=red),affirm()");
  h.confidence = 0.5001;
  ParseHypothesis h2;
  h2.confidence = 0.5;
  auto q = quality_features({h, h2}, kb, 10);
  CHECK(q.fertility == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_FALSE(q.rare);
  CHECK(q.gap == doctest::Approx(std::log(1e-4)).epsilon(1e-6));
  CHECK(quality_features({h}, kb, 10).gap == kGapFloor);

  h.acts.push_back(DialogueAct("ack"));
  CHECK(quality_features({h}, kb, 10).rare);

  Segment known{0, 1, "apple", DialogueAct::with("inform", "fruit", "apple"), 1.0};
  Segment unknown{1, 3, "shiny thing", DialogueAct::with("inform", "texture", "shiny"), 0.6};
  h.segmentation = {known, unknown};
  CHECK(quality_features({h}, kb, 3).known_chunks == 0.5);
  CHECK_THROWS(quality_features({}, kb, 3));
}

TEST_CASE("quality dimension") {
  QualityFeatures f{0.40, 0.30, false, 0.60, -5.0};
  CHECK(quality_dimension(f) == 0);
  f.rare = true;
  CHECK(quality_dimension(f) == 2);
  CHECK(quality_dimension({0.499, 0.40, false, 0.50, -5.5}) == 0);
  CHECK(quality_dimension({0.6, 0.30, false, 0.60, -5.0}) == 1);
  CHECK(quality_dimension({0.4, 0.45, false, 0.60, -5.0}) == 1);
  CHECK(quality_dimension({0.4, 0.30, false, 0.10, -5.0}) == 2);
  CHECK(quality_dimension({0.4, 0.30, false, 0.60, -7.0}) == 2);
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const QualityFeatures r{rng.uniform(), rng.uniform(), rng.bernoulli(0.2), rng.uniform(), -10.0 * rng.uniform()};
    const int d = quality_dimension(r);
    CHECK((d >= 0 && d <= 2));
  }
}

TEST_CASE("annotation makes seen chunks parse") {
  const auto& f = fruits();
  const Parser parser(f.space);
  const auto r = oracle::grammar_learning(parser, f.onto, f.bank, 50, 50, 5);
  MESSAGE("zero-shot F1 " << r.zero_shot_f1 << ", after annotation " << r.learned_f1);
  CHECK(r.learned_f1 >= 0.9);
  CHECK(r.learned_f1 > r.zero_shot_f1);
}
