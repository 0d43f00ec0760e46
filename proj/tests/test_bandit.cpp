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
#include "dialearn/bandit.hpp"
#include "oracles.hpp"

using namespace dialearn;

namespace {

AnnotationOutcome confirm(bool accepted, std::vector<bool> verdicts = {}) {
  AnnotationOutcome o;
  o.action = AdaptationAction::AskConfirm;
  o.accepted = accepted;
  o.verdicts = std::move(verdicts);
  return o;
}

}  // namespace

TEST_CASE("effort counting") {
  CHECK(effort(AnnotationOutcome{}) == 0);
  CHECK(effort(confirm(true)) == 1);
  CHECK(effort(confirm(false, {true, false, false})) == 4);

  AnnotationOutcome a;
  a.action = AdaptationAction::AskAnnotation;
  a.accepted = true;
  CHECK(effort(a) == 1);
  a.accepted = false;
  a.spans = {{0, 2}, {3, 4}};
  a.das = parse_da("inform(color=red),inform(fruit=apple)");
  CHECK(effort(a) == 1 + 2 + 6);
  a.spans = {{0, 1}};
  a.das = parse_da("affirm()");
  CHECK(effort(a) == 1 + 1 + 1);
  a.das = parse_da("request(message)");
  CHECK(effort(a) == 1 + 1 + 2);
  a.das = {};
  CHECK_THROWS(effort(a));

  AnnotationOutcome bad;
  bad.accepted = true;
  CHECK_THROWS(effort(bad));
}

TEST_CASE("gain") {
  CHECK(gain(AnnotationOutcome{}, {0.9, 0, 0}) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(gain(confirm(false, {false, false, false}), {0.5, 3, 3}) == 0.0);
  CHECK(gain(confirm(true), {0.5, 3, 0}) == 1.0);
  AnnotationOutcome a;
  a.action = AdaptationAction::AskAnnotation;
  a.accepted = true;
  CHECK(gain(a, {0.5, 2, 0}) == 1.0);
  CHECK(gain(confirm(false), {0.5, 1, 5}) == 0.0);  // clamped
}

TEST_CASE("loss") {
  CHECK(loss(0.0, 0) == 0.0);
  CHECK(loss(1.0, 20) == 1.0);
  CHECK(loss(0.4, 5) == doctest::Approx(0.325).epsilon(1e-12));
  CHECK(loss(0.4, 500) == loss(0.4, 20));
  CHECK_THROWS(loss(0.2, -1));
  for (int phi = 0; phi < 25; ++phi)
    for (double g = 0.0; g < 1.0; g += 0.05) {
      CHECK(loss(g + 0.05, phi) >= loss(g, phi));
      CHECK(loss(g, phi + 1) >= loss(g, phi));
    }
}

TEST_CASE("fresh bandit is uniform") {
  const Bandit b;
  for (double p : b.probabilities()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("update rules") {
  Bandit b;
  b.update(AdaptationAction::AskConfirm, 0.0, 0.4);
  CHECK(b.weights() == std::array<double, 3>{1.0, 1.0, 1.0});

  b.update(AdaptationAction::Skip, 0.5, 0.25);
  b.update(AdaptationAction::AskAnnotation, 0.5, 0.25);
  CHECK(b.weights()[0] / b.weights()[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.weights()[0] == doctest::Approx(std::exp(-0.3 * 0.5 / 0.25)).epsilon(1e-12));
  CHECK_THROWS(b.update(AdaptationAction::Skip, 0.5, 0.0));
}

TEST_CASE("probabilities stay normalized with a mixing floor") {
  BanditParams params;
  params.seed = 12;
  Bandit b(params);
  Rng rng(3);
  for (int t = 0; t < 5000; ++t) {
    const auto c = b.choose();
    b.update(c.action, rng.uniform(), c.probability);
    const auto p = b.probabilities();
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-9));
    for (double x : p) CHECK(x >= params.mixing / 3.0 - 1e-12);
  }
}

TEST_CASE("stationary losses concentrate on the best arm") {
  const double p = oracle::bandit_stationary({0.9, 0.2, 0.6}, 1000, 1, 1);
  MESSAGE("P(AskConfirm) = " << p);
  CHECK(p > 0.8);
}

TEST_CASE("regret under alternating losses") {
  const double regret = oracle::bandit_alternating_regret(2000, 1);
  MESSAGE("regret = " << regret);
  CHECK(regret < 0.15 * 2000);
}

TEST_CASE("seeded determinism and persistence") {
  BanditParams params;
  params.seed = 99;
  Bandit a(params), b(params);
  std::vector<AdaptationAction> xs, ys;
  for (int i = 0; i < 100; ++i) {
    const auto ca = a.choose();
    const auto cb = b.choose();
    xs.push_back(ca.action);
    ys.push_back(cb.action);
    CHECK(ca.probability == cb.probability);
    a.update(ca.action, 0.1 * (i % 7), ca.probability);
    b.update(cb.action, 0.1 * (i % 7), cb.probability);
  }
  CHECK(xs == ys);
  CHECK(a.weights() == b.weights());

  Bandit c = Bandit::from_json(a.to_json());
  CHECK(c.weights() == a.weights());
  for (int i = 0; i < 20; ++i) CHECK(c.choose().action == a.choose().action);
}

TEST_CASE("outcome serialization") {
  AnnotationOutcome a;
  a.action = AdaptationAction::AskAnnotation;
  a.spans = {{0, 2}};
  a.das = parse_da("inform(color=red)");
  CHECK(outcome_from_json(outcome_to_json(a)) == a);
  const auto c = confirm(false, {true, false});
  CHECK(outcome_from_json(outcome_to_json(c)) == c);
  CHECK(adaptation_from_string(to_string(AdaptationAction::AskConfirm)) == AdaptationAction::AskConfirm);
  CHECK_THROWS(adaptation_from_string("Maybe"));
}
