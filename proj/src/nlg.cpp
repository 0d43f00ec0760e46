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


#include "dialearn/nlg.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

namespace dialearn {

namespace {

struct ParsedBase {
  TemplatePattern pattern;
  const std::vector<std::string>* variants;
  bool wildcard;
};

std::vector<ParsedBase> parsed_base(const TemplateStore& store) {
  std::vector<ParsedBase> out;
  for (const auto& [text, variants] : store.base) {
    auto p = parse_pattern(text);
    const bool wild = std::any_of(p.elements.begin(), p.elements.end(),
                                  [](const PatternElement& e) { return e.slot == "*"; });
    out.push_back({std::move(p), &variants, wild});
  }
  return out;
}

// Binds act pairs to pattern elements in pattern order; nullopt when the
// pattern does not cover the act exactly.
std::optional<std::map<char, SlotValue>> bind(const TemplatePattern& p, const DialogueAct& act) {
  if (p.acttype != act.acttype || p.elements.size() != act.pairs.size()) return std::nullopt;
  std::vector<bool> used(act.pairs.size(), false);
  std::map<char, SlotValue> binding;
  // Named slots first so a wildcard never steals a pair a named slot needs.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : p.elements) {
      if ((e.slot == "*") != (pass == 1)) continue;
      bool found = false;
      for (std::size_t i = 0; i < act.pairs.size() && !found; ++i) {
        if (used[i]) continue;
        const auto& pair = act.pairs[i];
        if (e.slot != "*" && e.slot != pair.slot) continue;
        if (e.placeholder.has_value() != pair.value.has_value()) continue;
        used[i] = true;
        found = true;
        if (e.placeholder) binding[*e.placeholder] = pair;
      }
      if (!found) return std::nullopt;
    }
  }
  return binding;
}

std::string describe_entity(const Ontology& onto, const std::string& id) {
  const Entity* e = onto.entity(id);
  if (!e) return id;
  auto attr = [&](const char* slot) {
    auto it = e->attributes.find(slot);
    return it == e->attributes.end() ? std::string() : onto.surface(it->second);
  };
  std::string out = attr("color") + " " + attr("fruit");
  const auto like = attr("looks_like");
  if (!like.empty()) out += " that looks like a " + like;
  return out;
}

std::string lexicalize(const Ontology& onto, const std::string& slot, const std::string& value) {
  if (slot == kNameSlot) return describe_entity(onto, value);
  return onto.surface(value);
}

std::string substitute(std::string text, const std::map<char, std::string>& binding) {
  for (const auto& [letter, value] : binding) {
    const std::string key = std::string("$") + letter;
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
      text.replace(pos, key.size(), value);
  }
  return text;
}

// "a"/"an" agreement with the following word.
std::string fix_articles(const std::string& text) {
  static const std::regex article(R"(\b([Aa])n? ([A-Za-z]))");
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), article);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, static_cast<std::size_t>(m.position()) - last);
    const char next = static_cast<char>(std::tolower(static_cast<unsigned char>(m.str(2)[0])));
    const bool vowel = std::string_view("aeiou").find(next) != std::string_view::npos;
    out += m.str(1) + (vowel ? "n " : " ") + m.str(2);
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::vector<std::string> placeholders_in(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < text.size(); ++i)
    if (text[i] == '$' && std::isalnum(static_cast<unsigned char>(text[i + 1])))
      out.push_back(text.substr(i + 1, 1));
  return out;
}

}  // namespace

TemplatePattern parse_pattern(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw ParseError("bad template pattern '" + text + "'");
  TemplatePattern p;
  p.acttype = text.substr(0, open);
  const std::string inner = text.substr(open + 1, text.size() - open - 2);
  std::size_t start = 0;
  while (start < inner.size()) {
    auto comma = inner.find(',', start);
    if (comma == std::string::npos) comma = inner.size();
    const std::string item = inner.substr(start, comma - start);
    const auto eq = item.find('=');
    PatternElement e;
    e.slot = item.substr(0, eq);
    if (eq != std::string::npos) {
      const std::string ph = item.substr(eq + 1);
      if (ph.size() != 2 || ph[0] != '$') throw ParseError("bad placeholder in pattern '" + text + "'");
      e.placeholder = ph[1];
    }
    if (e.slot.empty()) throw ParseError("empty slot in pattern '" + text + "'");
    p.elements.push_back(std::move(e));
    start = comma + 1;
  }
  return p;
}

TemplateStore templates_from_json(const nlohmann::json& j) {
  TemplateStore store;
  if (j.contains("base")) {
    for (const auto& [pattern, variants] : j.at("base").items()) {
      const auto p = parse_pattern(pattern);
      auto list = variants.get<std::vector<std::string>>();
      if (list.empty()) throw ValidationError("pattern " + pattern + " has no variants");
      for (const auto& v : list) {
        for (const auto& ph : placeholders_in(v)) {
          const bool bound = std::any_of(p.elements.begin(), p.elements.end(), [&](const PatternElement& e) {
            return e.placeholder && *e.placeholder == ph[0];
          });
          if (!bound) throw ValidationError("placeholder $" + ph + " unbound in " + pattern);
        }
      }
      store.base[pattern] = std::move(list);
    }
  }
  if (j.contains("fragments")) {
    for (const auto& [act, slots] : j.at("fragments").items())
      for (const auto& [slot, variants] : slots.items()) {
        auto list = variants.get<std::vector<std::string>>();
        for (const auto& v : list)
          for (const auto& ph : placeholders_in(v))
            if (ph != "A") throw ValidationError("fragment for " + act + "/" + slot + " uses $" + ph);
        store.fragments[act][slot] = std::move(list);
      }
  }
  if (j.contains("rules")) {
    for (const auto& r : j.at("rules")) {
      CombinationRule rule;
      rule.acttype = r.at("act").get<std::string>();
      rule.arity = r.at("arity").get<std::size_t>();
      rule.orders = r.at("orders").get<std::vector<std::vector<std::size_t>>>();
      rule.frames = r.at("frames").get<std::vector<std::string>>();
      for (const auto& order : rule.orders) {
        auto sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
          if (sorted.size() != rule.arity || sorted[i] != i)
            throw ValidationError("rule order is not a permutation for " + rule.acttype);
      }
      for (const auto& f : rule.frames)
        for (const auto& ph : placeholders_in(f)) {
          const int idx = ph[0] - '0';
          if (idx < 1 || static_cast<std::size_t>(idx) > rule.arity)
            throw ValidationError("frame placeholder $" + ph + " out of range for " + rule.acttype);
        }
      if (rule.orders.empty() || rule.frames.empty())
        throw ValidationError("rule for " + rule.acttype + " needs orders and frames");
      store.rules.push_back(std::move(rule));
    }
  }
  return store;
}

TemplateStore load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return templates_from_json(j);
}

std::string render(const DialogueAct& act, const TemplateStore& store, const Ontology& onto, Rng& rng) {
  const auto bases = parsed_base(store);
  for (int wild = 0; wild < 2; ++wild) {
    for (const auto& b : bases) {
      if (b.wildcard != (wild == 1)) continue;
      const auto binding = bind(b.pattern, act);
      if (!binding) continue;
      std::map<char, std::string> surfaces;
      for (const auto& [letter, pair] : *binding) surfaces[letter] = lexicalize(onto, pair.slot, *pair.value);
      const auto& variants = *b.variants;
      return fix_articles(substitute(variants[rng.index(variants.size())], surfaces));
    }
  }
  for (const auto& rule : store.rules) {
    if (rule.acttype != act.acttype || rule.arity != act.pairs.size()) continue;
    auto frags = store.fragments.find(act.acttype);
    if (frags == store.fragments.end()) continue;
    const bool covered = std::all_of(act.pairs.begin(), act.pairs.end(), [&](const SlotValue& p) {
      return p.value && frags->second.count(p.slot);
    });
    if (!covered) continue;
    const auto& order = rule.orders[rng.index(rule.orders.size())];
    std::string text = rule.frames[rng.index(rule.frames.size())];
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& pair = act.pairs[order[i]];
      const auto& variants = frags->second.at(pair.slot);
      const std::string piece =
          substitute(variants[rng.index(variants.size())], {{'A', lexicalize(onto, pair.slot, *pair.value)}});
      const std::string key = "$" + std::to_string(i + 1);
      text.replace(text.find(key), key.size(), piece);
    }
    return fix_articles(text);
  }
  throw GenerationError("no template covers " + act.str());
}

std::size_t expand_count(const TemplateStore& store) {
  std::size_t total = 0;
  for (const auto& [pattern, variants] : store.base) total += variants.size();
  for (const auto& rule : store.rules) {
    auto frags = store.fragments.find(rule.acttype);
    if (frags == store.fragments.end()) continue;
    std::vector<std::size_t> sizes;
    for (const auto& [slot, variants] : frags->second) sizes.push_back(variants.size());
    if (rule.arity > sizes.size()) continue;
    // Sum over slot combinations of the product of their variant counts
    // (elementary symmetric polynomial of degree `arity`).
    std::vector<std::size_t> e(rule.arity + 1, 0);
    e[0] = 1;
    for (std::size_t s : sizes)
      for (std::size_t k = rule.arity; k >= 1; --k) e[k] += e[k - 1] * s;
    total += e[rule.arity] * rule.orders.size() * rule.frames.size();
  }
  return total;
}

}  // namespace dialearn
