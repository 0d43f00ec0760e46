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

// Zero-shot semantic parser.
//
// The knowledge base maps lexical chunks to dialogue acts with assignment
// coefficients. Every contiguous chunk of an utterance (up to `max_chunk_len`
// words) is scored against its k nearest knowledge-base chunks in the
// embedding space; the score of act `a` for chunk `c` is
//
//     max over neighbours c' of  cos(c, c') * weight(c', a)
//
// with an exact knowledge-base row for `c` itself overriding the neighbours
// (validated -> 1, invalidated -> 0). The decoder then finds the n best
// segmentations, where a labelled chunk contributes log(score) and every
// unlabelled chunk contributes `null_log_penalty`.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dialearn/embeddings.hpp"
#include "dialearn/ontology.hpp"

namespace dialearn {

enum class CoefStatus { validated, invalidated, exploratory };

const char* to_string(CoefStatus s);
CoefStatus coef_status_from_string(const std::string& s);

struct AssignmentCoefficient {
  double weight = 0.0;
  CoefStatus status = CoefStatus::exploratory;

  bool operator==(const AssignmentCoefficient&) const = default;
};

struct KbCell {
  DialogueAct act;
  AssignmentCoefficient coef;
};

class KnowledgeBase {
 public:
  using Row = std::map<std::string, KbCell>;  // keyed by canonical act string

  const std::map<std::string, Row>& rows() const { return rows_; }
  const Row* row(const std::string& chunk) const;
  const AssignmentCoefficient* get(const std::string& chunk, const DialogueAct& act) const;
  // Sets a cell, enforcing the status/weight invariants. Returns true when
  // the stored value changed.
  bool set(const std::string& chunk, const DialogueAct& act, AssignmentCoefficient coef);
  std::size_t size() const;  // number of cells
  // Bumped on every change; lets parsers refresh cached chunk vectors.
  std::uint64_t version() const { return version_; }

  bool operator==(const KnowledgeBase& o) const;

 private:
  std::map<std::string, Row> rows_;
  std::uint64_t version_ = 0;
};

// Generic (domain-independent) seed lexicon, act -> surfaces.
const std::vector<std::pair<DialogueAct, std::vector<std::string>>>& generic_lexicon();

// One validated entry per lexicalization (value -> inform, slot -> request)
// plus the generic lexicon.
KnowledgeBase seed_from_ontology(const Ontology& onto);

void save_kb(const KnowledgeBase& kb, const std::string& path);
KnowledgeBase load_kb(const std::string& path);
std::string kb_to_jsonl(const KnowledgeBase& kb);
KnowledgeBase kb_from_jsonl(const std::string& text);

struct ParserParams {
  std::size_t max_chunk_len = 6;
  std::size_t k = 10;
  double null_log_penalty = std::log(0.15);
  std::size_t nbest = 5;
  std::size_t max_acts_per_chunk = 4;
  // confidence = logistic(conf_scale * path_score / words + conf_offset)
  double conf_scale = 2.0;
  double conf_offset = 3.0;
  double exploratory_weight = 0.3;  // weight given to alternative acts after feedback
};

struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::string chunk;
  std::optional<DialogueAct> act;  // nullopt for an unlabelled chunk
  double score = 0.0;              // chunk score in [0,1]; 0 for null chunks
};

struct ParseHypothesis {
  ActList acts;
  std::vector<Segment> segmentation;
  double path_score = 0.0;
  double confidence = 0.0;

  std::size_t labelled() const;
};

struct ChunkCandidate {
  DialogueAct act;
  double score;
};

class Parser {
 public:
  Parser(const EmbeddingSpace& space, ParserParams params = {});

  const ParserParams& params() const { return params_; }
  const EmbeddingSpace& space() const { return *space_; }

  // Scored act candidates for one chunk, best first (ties by act string).
  std::vector<ChunkCandidate> score_chunk(const KnowledgeBase& kb,
                                          const std::vector<std::string>& chunk) const;

  // n-best decode; words must already be normalized. An empty utterance
  // yields one empty hypothesis with confidence 0.
  std::vector<ParseHypothesis> parse(const std::vector<std::string>& words,
                                     const KnowledgeBase& kb) const;

  double confidence(double path_score, std::size_t words) const;

 private:
  void refresh_index(const KnowledgeBase& kb) const;

  const EmbeddingSpace* space_;
  ParserParams params_;
  // Unit vectors of the knowledge-base chunks, one row each.
  mutable std::uint64_t index_version_ = ~std::uint64_t{0};
  mutable const KnowledgeBase* index_kb_ = nullptr;
  mutable std::vector<std::string> index_chunks_;
  mutable Eigen::MatrixXd index_;
};

enum class Polarity { positive, negative };

// Binary user verdict on (chunk, act). Alternatives are other plausible acts
// for the chunk; they join the row as exploratory cells. Returns whether the
// judged cell changed.
bool apply_feedback(KnowledgeBase& kb, const std::string& chunk, const DialogueAct& act,
                    Polarity polarity, const std::vector<DialogueAct>& alternatives = {},
                    double exploratory_weight = 0.3);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const Span&) const = default;
};

// Each (span chunk, act) becomes a validated cell. Returns the number of new
// or corrected cells. Throws on arity mismatch, out-of-range or overlapping
// spans.
std::size_t apply_annotation(KnowledgeBase& kb, const std::vector<std::string>& words,
                             const std::vector<Span>& spans, const ActList& das);

struct QualityFeatures {
  double confidence = 0.0;
  double fertility = 0.0;
  bool rare = false;
  double known_chunks = 0.0;
  double gap = 0.0;
};

inline constexpr double kGapFloor = -20.72326583694641;  // ln(1e-9)

bool is_rare_act(const std::string& acttype);

QualityFeatures quality_features(const std::vector<ParseHypothesis>& hyps,
                                 const KnowledgeBase& kb, std::size_t utterance_words);

struct QualityThresholds {
  double clear_confidence_max = 0.499;
  double clear_fertility_max = 0.4;
  double clear_known_min = 0.5;
  double clear_gap_min = -5.5;
  double average_fertility_max = 0.5;
  double average_known_min = 0.15;
  double average_gap_min = -6.5;
};

// 0 all clear, 1 average condition, 2 alarming.
int quality_dimension(const QualityFeatures& f, const QualityThresholds& t = {});

}  // namespace dialearn
