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

#include "dialearn/zssp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dialearn {

const char* to_string(CoefStatus s) {
  switch (s) {
    case CoefStatus::validated: return "validated";
    case CoefStatus::invalidated: return "invalidated";
    case CoefStatus::exploratory: return "exploratory";
  }
  return "exploratory";
}

CoefStatus coef_status_from_string(const std::string& s) {
  if (s == "validated") return CoefStatus::validated;
  if (s == "invalidated") return CoefStatus::invalidated;
  if (s == "exploratory") return CoefStatus::exploratory;
  throw ParseError("unknown coefficient status '" + s + "'");
}

// --- knowledge base ------------------------------------------------------

const KnowledgeBase::Row* KnowledgeBase::row(const std::string& chunk) const {
  auto it = rows_.find(chunk);
  return it == rows_.end() ? nullptr : &it->second;
}

const AssignmentCoefficient* KnowledgeBase::get(const std::string& chunk,
                                                const DialogueAct& act) const {
  const Row* r = row(chunk);
  if (!r) return nullptr;
  auto it = r->find(act.str());
  return it == r->end() ? nullptr : &it->second.coef;
}

bool KnowledgeBase::set(const std::string& chunk, const DialogueAct& act,
                        AssignmentCoefficient coef) {
  if (chunk.empty()) throw Error("knowledge-base chunk must be non-empty");
  switch (coef.status) {
    case CoefStatus::validated: coef.weight = 1.0; break;
    case CoefStatus::invalidated: coef.weight = 0.0; break;
    case CoefStatus::exploratory: coef.weight = std::clamp(coef.weight, 0.0, 1.0); break;
  }
  auto& cell = rows_[chunk][act.str()];
  const bool fresh = cell.act.acttype.empty();
  if (!fresh && cell.coef == coef) return false;
  cell.act = act;
  cell.coef = coef;
  ++version_;
  return true;
}

std::size_t KnowledgeBase::size() const {
  std::size_t n = 0;
  for (const auto& [chunk, r] : rows_) n += r.size();
  return n;
}

bool KnowledgeBase::operator==(const KnowledgeBase& o) const {
  if (rows_.size() != o.rows_.size()) return false;
  for (auto a = rows_.begin(), b = o.rows_.begin(); a != rows_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.size() != b->second.size()) return false;
    for (auto x = a->second.begin(), y = b->second.begin(); x != a->second.end(); ++x, ++y) {
      if (x->first != y->first || !(x->second.coef == y->second.coef)) return false;
    }
  }
  return true;
}

const std::vector<std::pair<DialogueAct, std::vector<std::string>>>& generic_lexicon() {
  static const std::vector<std::pair<DialogueAct, std::vector<std::string>>> lex = {
      {DialogueAct("hello"), {"hello", "hi"}},
      {DialogueAct("bye"), {"bye"}},
      {DialogueAct("affirm"), {"yes"}},
      {DialogueAct("negate"), {"no"}},
      {DialogueAct("reqalts"), {"something else", "another"}},
      {DialogueAct("reqmore"), {"more"}},
      {DialogueAct("help"), {"help"}},
      {DialogueAct("repeat"), {"repeat", "again"}},
      {DialogueAct("restart"), {"restart", "start over"}},
      {DialogueAct("ack"), {"ok"}},
      {DialogueAct("thankyou"), {"thanks", "thank you"}},
  };
  return lex;
}

KnowledgeBase seed_from_ontology(const Ontology& onto) {
  KnowledgeBase kb;
  const AssignmentCoefficient validated{1.0, CoefStatus::validated};
  for (const auto& [value, surfaces] : onto.value_lex) {
    const auto slot = onto.slot_of(value);
    if (!slot) continue;
    for (const auto& s : surfaces)
      kb.set(join_words(normalize_words(s)), DialogueAct::with("inform", *slot, value), validated);
  }
  for (const auto& [slot, surfaces] : onto.slot_lex) {
    for (const auto& s : surfaces)
      kb.set(join_words(normalize_words(s)), DialogueAct("request", {{slot, std::nullopt}}), validated);
  }
  for (const auto& [act, surfaces] : generic_lexicon()) {
    if (!onto.has_act(act.acttype)) continue;
    for (const auto& s : surfaces) kb.set(join_words(normalize_words(s)), act, validated);
  }
  return kb;
}

std::string kb_to_jsonl(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& [chunk, row] : kb.rows()) {
    for (const auto& [key, cell] : row) {
      nlohmann::ordered_json j;
      j["chunk"] = chunk;
      j["act"] = key;
      j["weight"] = cell.coef.weight;
      j["status"] = to_string(cell.coef.status);
      out += j.dump();
      out.push_back('\n');
    }
  }
  return out;
}

KnowledgeBase kb_from_jsonl(const std::string& text) {
  KnowledgeBase kb;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto acts = parse_da(j.at("act").get<std::string>());
      if (acts.size() != 1) throw ParseError("expected exactly one act", lineno);
      kb.set(j.at("chunk").get<std::string>(), acts.front(),
             {j.at("weight").get<double>(), coef_status_from_string(j.at("status").get<std::string>())});
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("knowledge base record: ") + ex.what(), lineno);
    }
  }
  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write knowledge base '" + path + "'");
  out << kb_to_jsonl(kb);
}

KnowledgeBase load_kb(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open knowledge base '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return kb_from_jsonl(ss.str());
}

// --- parser ----------------------------------------------------------------

std::size_t ParseHypothesis::labelled() const {
  return static_cast<std::size_t>(std::count_if(segmentation.begin(), segmentation.end(),
                                                [](const Segment& s) { return s.act.has_value(); }));
}

Parser::Parser(const EmbeddingSpace& space, ParserParams params)
    : space_(&space), params_(params) {}

void Parser::refresh_index(const KnowledgeBase& kb) const {
  if (index_kb_ == &kb && index_version_ == kb.version()) return;
  index_chunks_.clear();
  std::vector<Vec> vecs;
  for (const auto& [chunk, row] : kb.rows()) {
    auto cv = chunk_vector(*space_, normalize_words(chunk));
    if (!cv.vector) continue;
    index_chunks_.push_back(chunk);
    vecs.push_back(std::move(*cv.vector));
  }
  index_.resize(static_cast<Eigen::Index>(vecs.size()), static_cast<Eigen::Index>(space_->dimension()));
  for (std::size_t r = 0; r < vecs.size(); ++r)
    for (std::size_t c = 0; c < vecs[r].size(); ++c)
      index_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vecs[r][c];
  index_kb_ = &kb;
  index_version_ = kb.version();
}

std::vector<ChunkCandidate> Parser::score_chunk(const KnowledgeBase& kb,
                                                const std::vector<std::string>& chunk) const {
  refresh_index(kb);
  std::map<std::string, ChunkCandidate> acc;
  auto raise = [&](const KbCell& cell, double s) {
    auto key = cell.act.str();
    auto it = acc.find(key);
    if (it == acc.end()) acc.emplace(std::move(key), ChunkCandidate{cell.act, s});
    else it->second.score = std::max(it->second.score, s);
  };

  const auto cv = chunk_vector(*space_, chunk);
  if (cv.vector && index_.rows() > 0) {
    const Eigen::Map<const Eigen::VectorXd> q(cv.vector->data(), static_cast<Eigen::Index>(cv.vector->size()));
    const Eigen::VectorXd sims = index_ * q;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(static_cast<std::size_t>(sims.size()));
    for (Eigen::Index i = 0; i < sims.size(); ++i)
      if (sims[i] > 0.0) order.emplace_back(std::min(sims[i], 1.0), static_cast<std::size_t>(i));
    const auto k = std::min(params_.k, order.size());
    auto better = [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return index_chunks_[a.second] < index_chunks_[b.second];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    for (std::size_t n = 0; n < k; ++n) {
      const auto* r = kb.row(index_chunks_[order[n].second]);
      for (const auto& [key, cell] : *r)
        if (cell.coef.weight > 0.0) raise(cell, order[n].first * cell.coef.weight);
    }
  }

  if (const auto* exact = kb.row(join_words(chunk))) {
    for (const auto& [key, cell] : *exact) {
      switch (cell.coef.status) {
        case CoefStatus::validated:
          raise(cell, 1.0);
          acc[key].score = 1.0;
          break;
        case CoefStatus::invalidated: acc.erase(key); break;
        case CoefStatus::exploratory: raise(cell, cell.coef.weight); break;
      }
    }
  }

  std::vector<ChunkCandidate> out;
  for (auto& [key, cand] : acc)
    if (cand.score > 0.0) out.push_back(std::move(cand));
  std::stable_sort(out.begin(), out.end(),
                   [](const ChunkCandidate& a, const ChunkCandidate& b) { return a.score > b.score; });
  if (out.size() > params_.max_acts_per_chunk) out.resize(params_.max_acts_per_chunk);
  return out;
}

double Parser::confidence(double path_score, std::size_t words) const {
  if (words == 0) return 0.0;
  const double z = params_.conf_scale * path_score / static_cast<double>(words) + params_.conf_offset;
  return 1.0 / (1.0 + std::exp(-z));
}

namespace {

struct Partial {
  double score;
  std::size_t segments;
  std::size_t start;  // chunk start position
  int label;          // index into the chunk's candidates, -1 for a null chunk
  std::size_t prev;   // rank in the partial list at `start`
};

bool partial_better(const Partial& a, const Partial& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.segments < b.segments;
}

}  // namespace

std::vector<ParseHypothesis> Parser::parse(const std::vector<std::string>& words,
                                           const KnowledgeBase& kb) const {
  const std::size_t n = words.size();
  if (n == 0) return {ParseHypothesis{}};
  const std::size_t max_len = std::max<std::size_t>(1, params_.max_chunk_len);
  const std::size_t keep = std::max<std::size_t>(1, params_.nbest);

  // cands[i][len-1]: candidates for chunk words[i, i+len)
  std::vector<std::vector<std::vector<ChunkCandidate>>> cands(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
      std::vector<std::string> chunk(words.begin() + static_cast<std::ptrdiff_t>(i),
                                     words.begin() + static_cast<std::ptrdiff_t>(i + len));
      cands[i].push_back(score_chunk(kb, chunk));
    }
  }

  std::vector<std::vector<Partial>> best(n + 1);
  best[0].push_back({0.0, 0, 0, -1, 0});
  for (std::size_t j = 1; j <= n; ++j) {
    std::vector<Partial> next;
    const std::size_t lo = j > max_len ? j - max_len : 0;
    for (std::size_t i = lo; i < j; ++i) {
      const auto& labels = cands[i][j - i - 1];
      for (std::size_t r = 0; r < best[i].size(); ++r) {
        const Partial& p = best[i][r];
        for (std::size_t l = 0; l < labels.size(); ++l)
          next.push_back({p.score + std::log(labels[l].score), p.segments + 1, i, static_cast<int>(l), r});
        next.push_back({p.score + params_.null_log_penalty, p.segments + 1, i, -1, r});
      }
    }
    std::stable_sort(next.begin(), next.end(), partial_better);
    if (next.size() > keep) next.resize(keep);
    best[j] = std::move(next);
  }

  std::vector<ParseHypothesis> out;
  for (std::size_t r = 0; r < best[n].size(); ++r) {
    ParseHypothesis h;
    h.path_score = best[n][r].score;
    h.confidence = confidence(h.path_score, n);
    std::size_t j = n, rank = r;
    while (j > 0) {
      const Partial& p = best[j][rank];
      Segment seg;
      seg.begin = p.start;
      seg.end = j;
      seg.chunk = join_words(words, p.start, j);
      if (p.label >= 0) {
        const auto& c = cands[p.start][j - p.start - 1][static_cast<std::size_t>(p.label)];
        seg.act = c.act;
        seg.score = c.score;
      }
      h.segmentation.push_back(std::move(seg));
      rank = p.prev;
      j = p.start;
    }
    std::reverse(h.segmentation.begin(), h.segmentation.end());
    for (const auto& s : h.segmentation)
      if (s.act) h.acts.push_back(*s.act);
    out.push_back(std::move(h));
  }
  return out;
}

// --- feedback ----------------------------------------------------------------

bool apply_feedback(KnowledgeBase& kb, const std::string& chunk, const DialogueAct& act,
                    Polarity polarity, const std::vector<DialogueAct>& alternatives,
                    double exploratory_weight) {
  if (chunk.empty()) throw Error("feedback chunk must be non-empty");
  const auto key = act.str();
  auto explore = [&](const DialogueAct& other) {
    if (other.str() == key) return;
    const auto* cur = kb.get(chunk, other);
    if (cur && cur->status != CoefStatus::exploratory) return;
    kb.set(chunk, other, {exploratory_weight, CoefStatus::exploratory});
  };
  // Snapshot: explore() may insert into the row being iterated.
  std::vector<DialogueAct> existing;
  if (const auto* r = kb.row(chunk))
    for (const auto& [k, cell] : *r) existing.push_back(cell.act);

  const bool changed =
      polarity == Polarity::positive
          ? kb.set(chunk, act, {1.0, CoefStatus::validated})
          : kb.set(chunk, act, {0.0, CoefStatus::invalidated});
  for (const auto& other : existing) explore(other);
  for (const auto& other : alternatives) explore(other);
  return changed;
}

std::size_t apply_annotation(KnowledgeBase& kb, const std::vector<std::string>& words,
                             const std::vector<Span>& spans, const ActList& das) {
  if (spans.size() != das.size())
    throw Error("annotation has " + std::to_string(spans.size()) + " spans but " +
                std::to_string(das.size()) + " acts");
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].begin >= sorted[i].end || sorted[i].end > words.size())
      throw Error("annotation span out of range");
    if (i && sorted[i].begin < sorted[i - 1].end) throw Error("annotation spans overlap");
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (kb.set(join_words(words, spans[i].begin, spans[i].end), das[i], {1.0, CoefStatus::validated}))
      ++changed;
  }
  return changed;
}

// --- quality -----------------------------------------------------------------

bool is_rare_act(const std::string& acttype) {
  static const char* const rare[] = {"help", "repeat", "restart", "reqalts", "reqmore", "ack", "thankyou"};
  return std::any_of(std::begin(rare), std::end(rare), [&](const char* r) { return acttype == r; });
}

QualityFeatures quality_features(const std::vector<ParseHypothesis>& hyps,
                                 const KnowledgeBase& kb, std::size_t utterance_words) {
  if (hyps.empty()) throw Error("quality_features needs at least one hypothesis");
  const auto& best = hyps.front();
  QualityFeatures f;
  f.confidence = best.confidence;
  f.fertility = utterance_words == 0
                    ? 0.0
                    : std::min(1.0, static_cast<double>(count_concepts(best.acts)) /
                                        static_cast<double>(utterance_words));
  f.rare = std::any_of(best.acts.begin(), best.acts.end(),
                       [](const DialogueAct& a) { return is_rare_act(a.acttype); });
  std::size_t annotated = 0, known = 0;
  for (const auto& seg : best.segmentation) {
    if (!seg.act) continue;
    ++annotated;
    if (kb.row(seg.chunk)) ++known;
  }
  f.known_chunks = annotated ? static_cast<double>(known) / static_cast<double>(annotated) : 0.0;
  if (hyps.size() < 2) {
    f.gap = kGapFloor;
  } else {
    const double diff = hyps[0].confidence - hyps[1].confidence;
    f.gap = std::max(kGapFloor, std::log(std::max(diff, 1e-9)));
  }
  return f;
}

int quality_dimension(const QualityFeatures& f, const QualityThresholds& t) {
  const bool alarming = f.rare || f.fertility > t.average_fertility_max ||
                        f.known_chunks < t.average_known_min || f.gap < t.average_gap_min;
  if (alarming) return 2;
  const bool clear = f.confidence <= t.clear_confidence_max && f.fertility <= t.clear_fertility_max &&
                     f.known_chunks >= t.clear_known_min && f.gap >= t.clear_gap_min;
  return clear ? 0 : 1;
}

}  // namespace dialearn
