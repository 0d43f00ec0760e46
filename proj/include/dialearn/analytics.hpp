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


// Training-analysis metrics computed from dialogue logs alone.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialearn/ontology.hpp"
#include "dialearn/orchestrator.hpp"

namespace dialearn {

// Trailing mean over max(0, i-W+1)..i.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

enum class ConceptSource { oracle, parse };
const char* to_string(ConceptSource s);

struct DialogueMetrics {
  bool success = false;
  std::size_t turns = 0;  // system and user utterances
  std::size_t concepts = 0;
  ConceptSource concept_source = ConceptSource::oracle;
  double utterance_words = 0.0;  // mean over user turns
  std::size_t positive_feedbacks = 0;
  std::size_t negative_feedbacks = 0;
  double cumulative_reward = 0.0;
};

// Throws ValidationError on a log that never ended.
DialogueMetrics dialogue_metrics(const DialogueLog& log);

// |hyp ∩ ref| / (|ref| + insertions); both empty scores 1.
double sp_success_score(const std::vector<Concept>& hyp, const std::vector<Concept>& ref);

struct MetricSeries {
  std::string name;
  std::vector<double> values;
  std::vector<double> smoothed;
};

struct Report {
  std::string protocol;
  std::size_t window = 10;
  std::vector<MetricSeries> series;  // success, turns, concepts, utterance_words, positive, negative
};

// Rejects logs from several protocols; use report_by_protocol for those.
Report report(const std::vector<DialogueLog>& logs, std::size_t window = 10);
std::map<std::string, Report> report_by_protocol(const std::vector<DialogueLog>& logs, std::size_t window = 10);

std::string report_csv(const Report& r);
nlohmann::json report_plot_data(const Report& r);

struct AggregateRow {
  std::string protocol;
  std::size_t train_dialogues = 0;
  std::size_t test_dialogues = 0;
  double success_pct = 0.0;
  double avg_cumulative_reward = 0.0;
};

AggregateRow aggregate(const std::string& protocol, std::size_t train_dialogues,
                       const std::vector<DialogueLog>& test);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace dialearn
