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
#include "dialearn/analytics.hpp"
#include "oracles.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace dialearn;

namespace {

const std::string kFixtures = DIALEARN_FIXTURES_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TurnRecord user_turn(std::size_t index, const std::string& text, const std::string& oracle) {
  TurnRecord t;
  t.index = index;
  t.user_text = text;
  t.oracle = oracle;
  t.final_parse = oracle;
  t.system_act = "inform()";
  return t;
}

DialogueLog ended(Protocol p, bool success) {
  DialogueLog l;
  l.id = "x";
  l.protocol = p;
  l.success = success;
  return l;
}

}  // namespace

TEST_CASE("moving average matches the naive trailing mean") {
  CHECK(moving_average({0.0, 1.0}, 2) == std::vector<double>{0.0, 0.5});
  CHECK(moving_average({}, 3).empty());
  CHECK_THROWS_AS(moving_average({1.0}, 0), Error);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (std::size_t w : {1u, 2u, 7u, 10u, 64u}) {
    std::vector<double> v(1000);
    for (auto& x : v) x = u(rng);
    const auto fast = moving_average(v, w);
    const auto slow = oracle::naive_moving_average(v, w);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) <= 1e-12);
  }
}

TEST_CASE("sp_success_score") {
  const std::vector<Concept> apple{{"inform", "fruit", "apple"}};
  const std::vector<Concept> red{{"inform", "color", "red"}};
  std::vector<Concept> both = apple;
  both.push_back(red.front());
  CHECK(sp_success_score(apple, apple) == 1.0);
  CHECK(sp_success_score(both, apple) == doctest::Approx(0.5));
  CHECK(sp_success_score(red, apple) == 0.0);
  CHECK(sp_success_score({}, {}) == 1.0);
  CHECK(sp_success_score({}, apple) == 0.0);
}

TEST_CASE("metrics of the upside-down apple dialogue") {
  const auto logs = load_logs(kFixtures + "/analytics_logs.jsonl");
  REQUIRE(logs.size() == 30);
  const auto m = dialogue_metrics(logs.front());
  CHECK(m.success);
  CHECK(m.turns == 14);
  CHECK(m.concepts == 9);
  CHECK(m.concept_source == ConceptSource::oracle);
  CHECK(m.utterance_words == doctest::Approx(4.0));
}

TEST_CASE("report CSV equals the golden file") {
  const auto logs = load_logs(kFixtures + "/analytics_logs.jsonl");
  const auto r = report(logs, 10);
  CHECK(r.protocol == "BR");
  CHECK(report_csv(r) == slurp(kFixtures + "/analytics_report.csv"));
  const auto plot = report_plot_data(r);
  CHECK(plot["series"].size() == 6);
  CHECK(plot["series"][0]["values"].size() == 30);
}

TEST_CASE("feedback counts skip parser requests") {
  auto l = ended(Protocol::RR, true);
  auto t = user_turn(1, "a red apple", "inform(fruit=apple,color=red)");
  t.steps = {{SummaryAct::AskConfirm, "", 1.0, std::nullopt},
             {SummaryAct::Inform, "inform(fruit=apple)", 0.5, std::nullopt},
             {SummaryAct::Repeat, "repeat()", -1.0, std::nullopt},
             {SummaryAct::Offer, "offer(fruit=apple)", 0.0, std::nullopt}};
  l.turns.push_back(t);
  const auto m = dialogue_metrics(l);
  CHECK(m.positive_feedbacks == 1);
  CHECK(m.negative_feedbacks == 1);
  CHECK(m.turns == 2);
  CHECK(m.concepts == 2);
  CHECK(m.utterance_words == 3.0);
}

TEST_CASE("concepts fall back to the parse when an oracle is missing") {
  auto l = ended(Protocol::BH, false);
  l.turns.push_back(user_turn(1, "red", "inform(color=red)"));
  auto t = user_turn(2, "apple", "inform(fruit=apple)");
  t.oracle.reset();
  t.final_parse = "inform(fruit=apple), thankyou()";
  l.turns.push_back(t);
  const auto m = dialogue_metrics(l);
  CHECK(m.concept_source == ConceptSource::parse);
  CHECK(m.concepts == 3);
}

TEST_CASE("empty and unfinished dialogues") {
  const auto empty = dialogue_metrics(ended(Protocol::ZH, false));
  CHECK(empty.turns == 0);
  CHECK(empty.concepts == 0);
  CHECK(empty.utterance_words == 0.0);

  DialogueLog open;
  open.id = "open";
  open.turns.push_back(user_turn(1, "hi", "hello()"));
  CHECK_THROWS_AS(dialogue_metrics(open), ValidationError);
}

TEST_CASE("truncated log file reports the line") {
  const std::string path = "analytics_truncated.jsonl";
  {
    std::ifstream in(kFixtures + "/analytics_logs.jsonl");
    std::string first, second;
    std::getline(in, first);
    std::getline(in, second);
    std::ofstream out(path);
    out << first << '\n' << second.substr(0, second.size() / 2) << '\n';
  }
  try {
    load_logs(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("mixed protocols need report_by_protocol") {
  std::vector<DialogueLog> logs{ended(Protocol::ZH, true), ended(Protocol::BR, false), ended(Protocol::ZH, false)};
  CHECK_THROWS_AS(report(logs), ValidationError);
  CHECK_THROWS_AS(report({}), Error);
  const auto groups = report_by_protocol(logs, 2);
  REQUIRE(groups.size() == 2);
  CHECK(groups.at("ZH").series[0].values == std::vector<double>{1.0, 0.0});
  CHECK(groups.at("ZH").series[0].smoothed == std::vector<double>{1.0, 0.5});
  CHECK(groups.at("BR").series[0].values.size() == 1);
}

TEST_CASE("aggregate table") {
  auto a = ended(Protocol::BR, true);
  a.cumulative_reward = 15.0;
  auto b = ended(Protocol::BR, false);
  b.cumulative_reward = -6.0;
  const auto row = aggregate("BR", 140, {a, b, a, a});
  CHECK(row.test_dialogues == 4);
  CHECK(row.success_pct == doctest::Approx(75.0));
  CHECK(row.avg_cumulative_reward == doctest::Approx(9.75));
  const auto none = aggregate("ZH", 0, {});
  CHECK(none.success_pct == 0.0);
  CHECK(aggregate_csv({row, none}) ==
        "system,train_dialogues,test_dialogues,success_pct,avg_cum_reward\n"
        "BR,140,4,75.000000,9.750000\n"
        "ZH,0,0,0.000000,0.000000\n");
}
