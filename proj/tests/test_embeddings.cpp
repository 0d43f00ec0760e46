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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "dialearn/common.hpp"
#include "dialearn/embeddings.hpp"

using namespace dialearn;

namespace {

const std::string kToy = std::string(DIALEARN_FIXTURES_DIR) + "/toy_vectors.txt";

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path) << text;
  return path;
}

ChunkVector cv_of(Vec v) {
  ChunkVector c;
  const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= n;
  c.vector = std::move(v);
  c.coverage = 1.0;
  return c;
}

}  // namespace

TEST_CASE("loading word2vec text") {
  const auto path = write_temp("dialearn_emb3.txt", "3 4\na 1 0 0 0\nb 3 4 0 0\nc 0 0 0 2\n");
  const EmbeddingSpace s = load_embeddings(path);
  CHECK(s.size() == 3);
  CHECK(s.dimension() == 4);
  // A single-word chunk is the word's direction.
  const auto b = chunk_vector(s, {"b"});
  REQUIRE(b.vector);
  CHECK((*b.vector)[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK((*b.vector)[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(b.coverage == 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("wrong arity is reported at its line") {
  const auto path = write_temp("dialearn_emb_bad.txt", "3 4\na 1 0 0 0\nb 3 4 0\nc 0 0 0 2\n");
  try {
    load_embeddings(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::filesystem::remove(path);
}

TEST_CASE("duplicate words: last wins") {
  const auto path = write_temp("dialearn_emb_dup.txt", "2 2\na 1 0\na 0 1\n");
  const EmbeddingSpace s = load_embeddings(path);
  CHECK(s.size() == 1);
  const auto a = chunk_vector(s, {"a"});
  CHECK((*a.vector)[1] == doctest::Approx(1.0));
  std::filesystem::remove(path);
}

TEST_CASE("chunk vectors") {
  const EmbeddingSpace s = load_embeddings(kToy);
  CHECK(s.size() == 60);
  CHECK(s.dimension() == 16);
  const auto one = chunk_vector(s, {"red"});
  const auto two = chunk_vector(s, {"red", "red"});
  REQUIRE(one.vector);
  CHECK(cosine(*one.vector, *two.vector) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < one.vector->size(); ++i)
    CHECK((*one.vector)[i] == doctest::Approx((*two.vector)[i]).epsilon(1e-12));

  const auto oov = chunk_vector(s, {"zzz", "qqq"});
  CHECK(oov.coverage == 0.0);
  CHECK_FALSE(oov.vector);

  const auto half = chunk_vector(s, {"red", "zzz"});
  CHECK(half.coverage == 0.5);
  CHECK(cosine(*half.vector, *one.vector) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cosine properties on the fixture") {
  const EmbeddingSpace s = load_embeddings(kToy);
  const auto red = *chunk_vector(s, {"red"}).vector;
  const auto crimson = *chunk_vector(s, {"crimson"}).vector;
  const auto lemon = *chunk_vector(s, {"lemon"}).vector;
  CHECK(cosine(red, crimson) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(cosine(red, crimson) == doctest::Approx(cosine(crimson, red)).epsilon(1e-15));
  CHECK(cosine(red, red) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine(red, lemon) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("knn") {
  const EmbeddingSpace s = load_embeddings(kToy);
  std::vector<std::pair<std::string, ChunkVector>> cands;
  for (const char* w : {"red", "lemon", "scarlet", "bye", "apple"}) cands.emplace_back(w, chunk_vector(s, {w}));
  const auto top = knn(chunk_vector(s, {"red"}), cands, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].chunk == "red");
  CHECK(top[0].similarity == doctest::Approx(1.0));
  CHECK(top[1].chunk == "scarlet");
  CHECK(top[1].similarity == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(knn(chunk_vector(s, {"red"}), cands, 50).size() == 5);
  CHECK(knn(chunk_vector(s, {"zzz"}), cands, 2).empty());

  // Orthogonal query.
  const auto orth = knn(cv_of({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}),
                        {{"x", cv_of({1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0})}}, 1);
  CHECK(orth[0].similarity == 0.0);
}

TEST_CASE("knn is a prefix of the exhaustive sort") {
  Rng rng(8);
  auto rand_cv = [&] {
    Vec v(8);
    for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
    return cv_of(v);
  };
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, ChunkVector>> cands;
    const std::size_t n = 5 + rng.index(96);
    for (std::size_t i = 0; i < n; ++i) cands.emplace_back("c" + std::to_string(i), rand_cv());
    // Exact duplicates exercise the tie rule.
    cands.push_back({"a_dup", cands[0].second});
    const auto q = rand_cv();
    std::vector<Neighbour> all;
    for (const auto& [name, c] : cands) all.push_back({name, cosine(*q.vector, *c.vector)});
    std::sort(all.begin(), all.end(), [](const Neighbour& a, const Neighbour& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity : a.chunk < b.chunk;
    });
    const std::size_t k = 1 + rng.index(10);
    const auto got = knn(q, cands, k);
    REQUIRE(got.size() == std::min(k, all.size()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].chunk == all[i].chunk);
      CHECK(got[i].similarity == all[i].similarity);
    }
  }
}
