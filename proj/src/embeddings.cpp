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

#include "dialearn/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dialearn/common.hpp"

namespace dialearn {

namespace {

double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void EmbeddingSpace::add(const std::string& word, Vec v) {
  if (v.size() != dim_) throw Error("vector for '" + word + "' has wrong dimension");
  if (norm(v) == 0.0) throw Error("zero vector for '" + word + "'");
  table_[word] = std::move(v);
}

const Vec* EmbeddingSpace::find(const std::string& word) const {
  auto it = table_.find(word);
  return it == table_.end() ? nullptr : &it->second;
}

EmbeddingSpace load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file '" + path + "'");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty embeddings file", 1);
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> count >> dim) || dim == 0) throw ParseError("bad embeddings header", 1);
  }
  EmbeddingSpace space(dim);
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    Vec v;
    v.reserve(dim);
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw ParseError("non-numeric component for '" + word + "'", lineno);
    if (v.size() != dim)
      throw ParseError("expected " + std::to_string(dim) + " components for '" + word + "', got " +
                           std::to_string(v.size()),
                       lineno);
    if (space.find(word)) std::clog << "warning: duplicate embedding for '" << word << "' at line " << lineno << "\n";
    try {
      space.add(word, std::move(v));
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return space;
}

ChunkVector chunk_vector(const EmbeddingSpace& space, const std::vector<std::string>& chunk) {
  ChunkVector out;
  if (chunk.empty()) return out;
  Vec sum(space.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& w : chunk) {
    const Vec* v = space.find(w);
    if (!v) continue;
    ++found;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
  }
  out.coverage = static_cast<double>(found) / static_cast<double>(chunk.size());
  if (found == 0) return out;
  const double n = norm(sum);
  if (n == 0.0) return out;  // opposite vectors cancelled out
  for (double& x : sum) x /= n;
  out.vector = std::move(sum);
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::vector<Neighbour> knn(const ChunkVector& query,
                           const std::vector<std::pair<std::string, ChunkVector>>& candidates,
                           std::size_t k) {
  std::vector<Neighbour> all;
  if (!query.vector || k == 0) return all;
  all.reserve(candidates.size());
  for (const auto& [chunk, cv] : candidates) {
    if (!cv.vector) continue;
    all.push_back({chunk, cosine(*query.vector, *cv.vector)});
  }
  auto better = [](const Neighbour& a, const Neighbour& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.chunk < b.chunk;
  };
  if (all.size() > k) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
    all.resize(k);
  } else {
    std::sort(all.begin(), all.end(), better);
  }
  return all;
}

}  // namespace dialearn
