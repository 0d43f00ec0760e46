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


#include "dialearn/analytics.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace dialearn {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw Error("moving average window must be at least 1");
  std::vector<double> out;
  out.reserve(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    const std::size_t n = std::min(i + 1, window);
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

const char* to_string(ConceptSource s) { return s == ConceptSource::oracle ? "oracle" : "parse"; }

DialogueMetrics dialogue_metrics(const DialogueLog& log) {
  if (!log.success) throw ValidationError("log " + log.id + " has no outcome (dialogue not ended)");
  DialogueMetrics m;
  m.success = *log.success;
  m.cumulative_reward = log.cumulative_reward;
  const bool oracle = std::all_of(log.turns.begin(), log.turns.end(), [](const TurnRecord& t) {
    return !t.user_text || t.oracle.has_value();
  });
  m.concept_source = oracle ? ConceptSource::oracle : ConceptSource::parse;
  std::size_t user_turns = 0, words = 0;
  for (const auto& t : log.turns) {
    if (!t.system_act.empty() || !t.system_text.empty()) ++m.turns;
    if (t.user_text) {
      ++m.turns;
      ++user_turns;
      words += normalize_words(*t.user_text).size();
      m.concepts += count_concepts(parse_da(oracle ? *t.oracle : t.final_parse));
    }
    for (const auto& s : t.steps) {
      if (is_ask(s.summary)) continue;
      if (s.psi > 0) ++m.positive_feedbacks;
      if (s.psi < 0) ++m.negative_feedbacks;
    }
  }
  if (user_turns) m.utterance_words = static_cast<double>(words) / static_cast<double>(user_turns);
  return m;
}

double sp_success_score(const std::vector<Concept>& hyp, const std::vector<Concept>& ref) {
  if (hyp.empty() && ref.empty()) {
    std::clog << "note: empty hypothesis and reference score 1 by convention\n";
    return 1.0;
  }
  std::vector<Concept> remaining = ref;
  std::size_t correct = 0, insertions = 0;
  for (const auto& c : hyp) {
    auto it = std::find(remaining.begin(), remaining.end(), c);
    if (it != remaining.end()) {
      ++correct;
      remaining.erase(it);
    } else {
      ++insertions;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ref.size() + insertions);
}

Report report(const std::vector<DialogueLog>& logs, std::size_t window) {
  if (logs.empty()) throw Error("report needs at least one log");
  for (const auto& l : logs)
    if (l.protocol != logs.front().protocol)
      throw ValidationError("logs mix protocols " + std::string(to_string(logs.front().protocol)) + " and " +
                            to_string(l.protocol));
  Report r;
  r.protocol = to_string(logs.front().protocol);
  r.window = window;
  r.series = {{"success", {}, {}}, {"turns", {}, {}}, {"concepts", {}, {}},
              {"utterance_words", {}, {}}, {"positive_feedback", {}, {}}, {"negative_feedback", {}, {}}};
  for (const auto& l : logs) {
    const auto m = dialogue_metrics(l);
    r.series[0].values.push_back(m.success ? 1.0 : 0.0);
    r.series[1].values.push_back(static_cast<double>(m.turns));
    r.series[2].values.push_back(static_cast<double>(m.concepts));
    r.series[3].values.push_back(m.utterance_words);
    r.series[4].values.push_back(static_cast<double>(m.positive_feedbacks));
    r.series[5].values.push_back(static_cast<double>(m.negative_feedbacks));
  }
  for (auto& s : r.series) s.smoothed = moving_average(s.values, window);
  return r;
}

std::map<std::string, Report> report_by_protocol(const std::vector<DialogueLog>& logs, std::size_t window) {
  std::map<std::string, std::vector<DialogueLog>> groups;
  for (const auto& l : logs) groups[to_string(l.protocol)].push_back(l);
  std::map<std::string, Report> out;
  for (const auto& [p, g] : groups) out[p] = report(g, window);
  return out;
}

std::string report_csv(const Report& r) {
  std::ostringstream out;
  out << "dialogue";
  for (const auto& s : r.series) out << ',' << s.name << ',' << s.name << "_ma" << r.window;
  out << '\n';
  const std::size_t n = r.series.empty() ? 0 : r.series.front().values.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << i + 1;
    for (const auto& s : r.series) out << ',' << fmt(s.values[i]) << ',' << fmt(s.smoothed[i]);
    out << '\n';
  }
  return out.str();
}

nlohmann::json report_plot_data(const Report& r) {
  nlohmann::json j;
  j["protocol"] = r.protocol;
  j["window"] = r.window;
  auto series = nlohmann::json::array();
  for (const auto& s : r.series) series.push_back({{"name", s.name}, {"values", s.values}, {"smoothed", s.smoothed}});
  j["series"] = std::move(series);
  return j;
}

AggregateRow aggregate(const std::string& protocol, std::size_t train_dialogues,
                       const std::vector<DialogueLog>& test) {
  AggregateRow row;
  row.protocol = protocol;
  row.train_dialogues = train_dialogues;
  row.test_dialogues = test.size();
  if (test.empty()) return row;
  double wins = 0.0, reward = 0.0;
  for (const auto& l : test) {
    const auto m = dialogue_metrics(l);
    wins += m.success ? 1.0 : 0.0;
    reward += m.cumulative_reward;
  }
  row.success_pct = 100.0 * wins / static_cast<double>(test.size());
  row.avg_cumulative_reward = reward / static_cast<double>(test.size());
  return row;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "system,train_dialogues,test_dialogues,success_pct,avg_cum_reward\n";
  for (const auto& r : rows)
    out << r.protocol << ',' << r.train_dialogues << ',' << r.test_dialogues << ',' << fmt(r.success_pct) << ','
        << fmt(r.avg_cumulative_reward) << '\n';
  return out.str();
}

}  // namespace dialearn
