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


// Command-line front end: train, chat, serve, analyze, eval.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dialearn/analytics.hpp"
#include "dialearn/gateway.hpp"
#include "dialearn/orchestrator.hpp"
#include "dialearn/simuser.hpp"

#ifndef DIALEARN_DOMAINS_DIR
#define DIALEARN_DOMAINS_DIR "domains"
#endif

namespace fs = std::filesystem;
using namespace dialearn;

namespace {

struct Common {
  std::string protocol = "BR";
  std::uint64_t seed = 0;
  std::string domains = DIALEARN_DOMAINS_DIR;
  std::string domain = "fruits";
  std::string config_path;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--protocol", c.protocol, "ZH, BH, BR or RR")
      ->check(CLI::IsMember({"ZH", "BH", "BR", "RR"}));
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--domains", c.domains, "Directory holding the domain files");
  app->add_option("--domain", c.domain, "Domain name");
  app->add_option("--config", c.config_path, "JSON config overriding the protocol defaults");
}

ProtocolConfig make_config(const Common& c) {
  if (!c.config_path.empty()) return load_config(c.config_path);
  return ProtocolConfig::make(protocol_from_string(c.protocol), c.seed);
}

SimulatedUser make_user(const Resources& res, const Common& c, double p_corrupt, bool curriculum) {
  SimUserParams params;
  params.p_corrupt = p_corrupt;
  params.curriculum = curriculum;
  params.seed = c.seed;
  return SimulatedUser(res, load_user_bank((fs::path(c.domains) / (c.domain + "_user.json")).string()), params);
}

void print_row(const AggregateRow& row) {
  std::cout << aggregate_csv({row});
}

std::string ask(const std::string& prompt) {
  std::cout << prompt << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) return "quit";
  return line;
}

bool yes(const std::string& s) { return !s.empty() && (s[0] == 'y' || s[0] == 'Y'); }

AnnotationOutcome ask_terminal(const AnnotationRequest& r) {
  AnnotationOutcome o;
  o.action = r.kind;
  std::string words;
  for (std::size_t i = 0; i < r.words.size(); ++i) words += (i ? " " : "") + std::to_string(i) + ":" + r.words[i];
  std::cout << "  understood: " << render_da(r.proposed) << "\n";
  if (yes(ask("  is that right? [y/n] "))) {
    o.accepted = true;
    return o;
  }
  if (r.kind == AdaptationAction::AskConfirm) {
    for (const auto& act : r.proposed) o.verdicts.push_back(yes(ask("  " + act.str() + "? [y/n] ")));
    return o;
  }
  std::cout << "  words: " << words << "\n"
            << "  enter one span per line as '<begin> <end> <act>' (end exclusive), blank line to finish\n";
  for (;;) {
    const auto line = ask("  > ");
    if (line.empty() || line == "quit") break;
    std::istringstream in(line);
    Span s;
    std::string act;
    if (!(in >> s.begin >> s.end >> act) || s.begin >= s.end || s.end > r.words.size()) {
      std::cout << "  expected '<begin> <end> <act>'\n";
      continue;
    }
    try {
      auto das = parse_da(act);
      if (das.size() != 1) throw ParseError("one act per span");
      o.spans.push_back(s);
      o.das.push_back(das.front());
    } catch (const std::exception& e) {
      std::cout << "  " << e.what() << "\n";
    }
  }
  return o;
}

int cmd_chat(const Common& c, const std::string& init_dir, const std::string& out_dir) {
  const auto res = load_resources(c.domains, c.domain);
  const auto config = make_config(c);
  Learner learner = init_dir.empty() ? Learner::make(res, config) : load_learner(res, config, init_dir);
  std::cout << "protocol " << to_string(config.protocol)
            << "; type your answers, ':+N' / ':-N' gives feedback in [-2,2], ':end' finishes\n";
  for (std::uint64_t index = learner.dialogues;; ++index) {
    Session session(res, config, learner, dialogue_id(config, index), session_seed(config, index));
    auto output = session.start();
    std::string reason;
    for (;;) {
      std::cout << "system: " << output.text << "\n";
      if (output.is_bye()) {
        reason = "system_bye";
        break;
      }
      if (session.system_turns() >= config.max_system_turns) {
        reason = "cap";
        break;
      }
      auto line = ask("you: ");
      if (line == "quit" || line == ":end") {
        reason = "user_end";
        break;
      }
      if (line.size() > 1 && line[0] == ':' && (line[1] == '+' || line[1] == '-')) {
        try {
          const double raw = std::stod(line.substr(1));
          session.social_feedback(snap_feedback(raw), raw);
        } catch (const std::exception& e) {
          std::cout << "  " << e.what() << "\n";
        }
        line = ask("you: ");
        if (line == "quit" || line == ":end") {
          reason = "user_end";
          break;
        }
      }
      auto r = session.user_turn(UserInput{line, std::nullopt, std::nullopt, false});
      while (r.request) r = session.annotation_response(ask_terminal(*r.request));
      output = *r.system;
    }
    const bool success = yes(ask("did the system give you the message? [y/n] "));
    const auto& log = session.end(success, reason);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      append_log(log, (fs::path(out_dir) / "logs.jsonl").string());
      save_learner(learner, config, out_dir);
    }
    if (!yes(ask("another dialogue? [y/n] "))) break;
  }
  return 0;
}

int cmd_analyze(const std::string& run, std::size_t window, const std::string& out) {
  const fs::path dir(run);
  const auto logs = load_logs((fs::is_directory(dir) ? dir / "logs.jsonl" : dir).string());
  const fs::path target = out.empty() ? (fs::is_directory(dir) ? dir : dir.parent_path()) : fs::path(out);
  fs::create_directories(target);
  for (const auto& [name, rep] : report_by_protocol(logs, window)) {
    const auto csv = target / ("metrics_" + name + ".csv");
    std::ofstream(csv) << report_csv(rep);
    std::ofstream(target / ("plot_" + name + ".json")) << report_plot_data(rep).dump(2) << '\n';
    std::cout << csv.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue system that learns its parser and policy on-line"};
  app.require_subcommand(1);

  Common common;
  std::size_t dialogues = 140;
  std::string out_dir;
  double p_corrupt = 0.1;
  bool curriculum = false;

  auto* train = app.add_subcommand("train", "Train against the simulated user");
  add_common(train, common);
  train->add_option("--dialogues", dialogues, "Training dialogues");
  train->add_option("--out", out_dir, "Run directory for logs and learned artifacts")->required();
  train->add_option("--p-corrupt", p_corrupt, "Word corruption probability of the noise channel");
  train->add_flag("--curriculum", curriculum, "Let the simulated user grow utterance complexity");

  std::string init_dir;
  auto* chat = app.add_subcommand("chat", "Talk to the system in the terminal");
  add_common(chat, common);
  chat->add_option("--init", init_dir, "Trained run to start from");
  chat->add_option("--out", out_dir, "Where to keep logs and learned artifacts");

  ServeOptions serve_opts;
  if (const char* port = std::getenv("DIALEARN_PORT")) serve_opts.port = static_cast<unsigned short>(std::atoi(port));
  auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over WebSocket");
  add_common(serve_cmd, common);
  serve_cmd->add_option("--address", serve_opts.address, "Bind address");
  serve_cmd->add_option("--port", serve_opts.port, "Port (default $DIALEARN_PORT or 8080)");
  serve_cmd->add_option("--static", serve_opts.static_dir, "UI bundle directory");
  serve_cmd->add_option("--out", serve_opts.out_dir, "Per-connection logs and artifacts");
  serve_cmd->add_option("--init", serve_opts.init_dir, "Trained run to start each connection from");

  std::string run;
  std::size_t window = 10;
  std::string analyze_out;
  auto* analyze = app.add_subcommand("analyze", "Training metrics from logs");
  analyze->add_option("run", run, "Run directory or JSONL log file")->required();
  analyze->add_option("--window", window, "Moving-average window")->check(CLI::PositiveNumber);
  analyze->add_option("--out", analyze_out, "Output directory (defaults to the run)");

  std::size_t train_count = 0;
  std::uint64_t first_index = 1000000;
  auto* eval = app.add_subcommand("eval", "Evaluate a frozen learner on fresh simulated dialogues");
  add_common(eval, common);
  eval->add_option("--dialogues", dialogues, "Test dialogues");
  eval->add_option("--init", init_dir, "Trained run to evaluate (default: untrained)");
  eval->add_option("--train-count", train_count, "Training dialogues to report (default: from --init)");
  eval->add_option("--p-corrupt", p_corrupt, "Word corruption probability");
  eval->add_option("--first-index", first_index, "Index of the first test dialogue");
  eval->add_option("--out", out_dir, "Write the test logs here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto res = load_resources(common.domains, common.domain);
      const auto config = make_config(common);
      auto user = make_user(res, common, p_corrupt, curriculum);
      Learner learner = Learner::make(res, config);
      std::size_t wins = 0;
      RunOptions opts;
      opts.out_dir = out_dir;
      opts.on_dialogue = [&](const DialogueLog& log) {
        wins += log.success.value_or(false) ? 1 : 0;
        std::clog << log.id << ' ' << (log.success.value_or(false) ? "success" : "failure") << ' '
                  << log.cumulative_reward << '\n';
      };
      const auto logs = run_training(res, config, learner, user, dialogues, opts);
      std::cout << "trained " << logs.size() << " dialogues, " << wins << " successful; artifacts in " << out_dir
                << '\n';
      return 0;
    }
    if (*chat) return cmd_chat(common, init_dir, out_dir);
    if (*serve_cmd) {
      const auto res = load_resources(common.domains, common.domain);
      serve(res, make_config(common), serve_opts);
      return 0;
    }
    if (*analyze) return cmd_analyze(run, window, analyze_out);
    if (*eval) {
      const auto res = load_resources(common.domains, common.domain);
      auto config = make_config(common);
      Learner learner = init_dir.empty() ? Learner::make(res, config) : load_learner(res, config, init_dir);
      if (train_count == 0) train_count = learner.dialogues;
      auto user = make_user(res, common, p_corrupt, false);
      const auto logs = run_evaluation(res, config, learner, user, dialogues, first_index);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const auto path = (fs::path(out_dir) / "test_logs.jsonl").string();
        std::ofstream(path, std::ios::trunc);
        for (const auto& log : logs) append_log(log, path);
      }
      print_row(aggregate(to_string(config.protocol), train_count, logs));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
