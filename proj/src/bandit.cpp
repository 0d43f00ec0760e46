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

#include "dialearn/bandit.hpp"

#include <algorithm>
#include <cmath>

namespace dialearn {

const char* to_string(AdaptationAction a) {
  switch (a) {
    case AdaptationAction::Skip: return "Skip";
    case AdaptationAction::AskConfirm: return "AskConfirm";
    case AdaptationAction::AskAnnotation: return "AskAnnotation";
  }
  return "Skip";
}

AdaptationAction adaptation_from_string(const std::string& s) {
  if (s == "Skip") return AdaptationAction::Skip;
  if (s == "AskConfirm") return AdaptationAction::AskConfirm;
  if (s == "AskAnnotation") return AdaptationAction::AskAnnotation;
  throw ParseError("unknown adaptation action '" + s + "'");
}

nlohmann::json outcome_to_json(const AnnotationOutcome& o) {
  nlohmann::json j;
  j["action"] = to_string(o.action);
  j["accepted"] = o.accepted;
  j["verdicts"] = o.verdicts;
  auto spans = nlohmann::json::array();
  for (const auto& s : o.spans) spans.push_back({s.begin, s.end});
  j["spans"] = std::move(spans);
  j["das"] = render_da(o.das);
  return j;
}

AnnotationOutcome outcome_from_json(const nlohmann::json& j) {
  AnnotationOutcome o;
  o.action = adaptation_from_string(j.at("action").get<std::string>());
  o.accepted = j.value("accepted", false);
  if (j.contains("verdicts")) o.verdicts = j.at("verdicts").get<std::vector<bool>>();
  if (j.contains("spans"))
    for (const auto& s : j.at("spans")) o.spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
  if (j.contains("das")) o.das = parse_da(j.at("das").get<std::string>());
  return o;
}

int interim_questions(const DialogueAct& act) {
  const bool has_slot = !act.pairs.empty();
  const bool has_value = std::any_of(act.pairs.begin(), act.pairs.end(),
                                     [](const SlotValue& p) { return p.value.has_value(); });
  return 1 + (has_slot ? 1 : 0) + (has_value ? 1 : 0);
}

int effort(const AnnotationOutcome& o) {
  switch (o.action) {
    case AdaptationAction::Skip:
      if (o.accepted || !o.verdicts.empty() || !o.spans.empty() || !o.das.empty())
        throw Error("Skip carries no annotation outcome");
      return 0;
    case AdaptationAction::AskConfirm:
      if (o.accepted) return 1;
      return 1 + static_cast<int>(o.verdicts.size());
    case AdaptationAction::AskAnnotation: {
      if (o.accepted) return 1;
      if (o.spans.size() != o.das.size()) throw Error("annotation spans and acts differ in number");
      int phi = 1 + static_cast<int>(o.spans.size());
      for (const auto& da : o.das) phi += interim_questions(da);
      return phi;
    }
  }
  return 0;
}

double gain(const AnnotationOutcome& o, const GainInputs& in) {
  double g = 0.0;
  switch (o.action) {
    case AdaptationAction::Skip:
      g = 1.0 - in.confidence;
      break;
    case AdaptationAction::AskConfirm:
      g = 1.0 - static_cast<double>(in.updated_cells) /
                    static_cast<double>(std::max<std::size_t>(in.proposed_acts, 1));
      break;
    case AdaptationAction::AskAnnotation:
      g = 1.0 - static_cast<double>(in.updated_cells) /
                    static_cast<double>(std::max<std::size_t>(o.spans.size(), 1));
      break;
  }
  return std::clamp(g, 0.0, 1.0);
}

double loss(double g, int phi, const LossParams& p) {
  if (phi < 0) throw Error("effort must be non-negative");
  const double capped = static_cast<double>(std::min(phi, p.phi_max)) / static_cast<double>(p.phi_max);
  return p.gamma * g + (1.0 - p.gamma) * capped;
}

Bandit::Bandit(BanditParams params) : params_(params), rng_(params.seed) {}

std::array<double, kAdaptationArms> Bandit::probabilities() const {
  double total = 0.0;
  for (double w : weights_) total += w;
  std::array<double, kAdaptationArms> p{};
  for (std::size_t i = 0; i < kAdaptationArms; ++i)
    p[i] = (1.0 - params_.mixing) * weights_[i] / total + params_.mixing / kAdaptationArms;
  return p;
}

BanditChoice Bandit::choose() {
  const auto p = probabilities();
  const double u = rng_.uniform();
  ++draws_;
  double acc = 0.0;
  for (std::size_t i = 0; i < kAdaptationArms; ++i) {
    acc += p[i];
    if (u < acc) return {static_cast<AdaptationAction>(i), p[i]};
  }
  return {static_cast<AdaptationAction>(kAdaptationArms - 1), p.back()};
}

void Bandit::update(AdaptationAction action, double l, double probability) {
  if (probability <= 0.0) throw Error("bandit update needs a positive probability");
  auto& w = weights_[static_cast<std::size_t>(action)];
  w *= std::exp(-params_.eta * l / probability);
  // Only ratios matter; rescale before the smallest weight underflows.
  const double top = *std::max_element(weights_.begin(), weights_.end());
  if (top < 1e-150 || top > 1e150) {
    for (double& x : weights_) x /= top;
  }
  for (double& x : weights_) x = std::max(x, 1e-300);
}

nlohmann::json Bandit::to_json() const {
  return {{"weights", weights_}, {"eta", params_.eta}, {"mixing", params_.mixing},
          {"seed", params_.seed}, {"draws", draws_}};
}

Bandit Bandit::from_json(const nlohmann::json& j) {
  BanditParams p;
  p.eta = j.at("eta").get<double>();
  p.mixing = j.at("mixing").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  Bandit b(p);
  b.weights_ = j.at("weights").get<std::array<double, kAdaptationArms>>();
  const auto draws = j.value("draws", std::uint64_t{0});
  for (std::uint64_t i = 0; i < draws; ++i) b.rng_.next();
  b.draws_ = draws;
  return b;
}

}  // namespace dialearn
