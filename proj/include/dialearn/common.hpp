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

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dialearn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; carries the 1-based line when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Seeded generator used everywhere randomness appears. Draws are derived from
// raw 64-bit outputs so sequences do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(uniform() * n); }
  Rng fork() { return Rng(engine_()); }

 private:
  std::mt19937_64 engine_;
};

// Lowercases, maps punctuation (except inner hyphens/apostrophes) to spaces and
// splits on whitespace.
std::vector<std::string> normalize_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words, std::size_t begin,
                       std::size_t end);
inline std::string join_words(const std::vector<std::string>& words) {
  return join_words(words, 0, words.size());
}

}  // namespace dialearn
