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

// Word-embedding feature space, chunk composition and cosine nearest
// neighbours. Word vectors keep their stored norm, so a chunk vector (the
// renormalized mean) leans toward its longer, usually rarer, words.

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dialearn {

using Vec = std::vector<double>;

class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  explicit EmbeddingSpace(std::size_t dimension) : dim_(dimension) {}

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  // Stores the L2-normalized copy; zero vectors are rejected.
  void add(const std::string& word, Vec v);
  const Vec* find(const std::string& word) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vec> table_;
};

struct ChunkVector {
  std::optional<Vec> vector;  // absent when no word is in vocabulary
  double coverage = 0.0;
};

// word2vec text format: "count dim" header then "word v1 ... vdim" lines.
// Duplicate words: the last line wins and a warning goes to std::clog.
EmbeddingSpace load_embeddings(const std::string& path);

// Renormalized mean of the in-vocabulary word vectors.
ChunkVector chunk_vector(const EmbeddingSpace& space, const std::vector<std::string>& chunk);

double cosine(const Vec& a, const Vec& b);

struct Neighbour {
  std::string chunk;
  double similarity;
};

// Top-k candidates by cosine similarity, descending; ties go to the
// lexicographically smaller chunk. Candidates without a vector are skipped.
std::vector<Neighbour> knn(const ChunkVector& query,
                           const std::vector<std::pair<std::string, ChunkVector>>& candidates,
                           std::size_t k);

}  // namespace dialearn
