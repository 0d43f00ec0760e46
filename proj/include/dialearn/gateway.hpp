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


// Live-session service. Each WebSocket connection carries one trainer; the
// wire format is one JSON object per text frame:
//
//   {"kind": "...", "session": "<id>", "payload": {...}}
//
// GatewaySession holds the per-connection protocol state machine and is
// independent of any transport, so tests drive it directly.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialearn/orchestrator.hpp"

namespace dialearn {

enum class MessageKind {
  session_start,
  system_utterance,
  user_utterance,
  annotation_request,
  annotation_response,
  social_feedback,
  dialogue_end,
  survey,
  error,
};

const char* to_string(MessageKind k);
MessageKind message_kind_from_string(const std::string& s);

struct SessionMessage {
  MessageKind kind = MessageKind::error;
  std::string session;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json message_to_json(const SessionMessage& m);
SessionMessage message_from_json(const nlohmann::json& j);

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Human feedback arrives on [-2, 2] in steps of 0.5; halved and snapped to
// the nearest potential, ties toward the smaller magnitude.
bool valid_raw_feedback(double raw);
double snap_feedback(double raw);

enum class GatewayState { idle, active, awaiting_annotation, ended };
const char* to_string(GatewayState s);

// Inbound kinds each state admits.
bool inbound_allowed(GatewayState state, MessageKind kind);

struct GatewayOptions {
  std::string log_path;       // JSONL; empty keeps logs in memory only
  std::string artifacts_dir;  // KB/bandit/policy saved after every dialogue
  std::int64_t idle_timeout_ms = 10 * 60 * 1000;
};

class GatewaySession {
 public:
  GatewaySession(const Resources& res, ProtocolConfig config, Learner& learner, std::string id,
                 GatewayOptions options = {});

  // Processes one inbound message. Throws ProtocolError on an illegal
  // message; the caller reports it and closes the connection.
  std::vector<SessionMessage> handle(const SessionMessage& in, std::int64_t now_ms);

  // Ends an idle dialogue as a failure once the timeout has passed.
  std::optional<SessionMessage> check_timeout(std::int64_t now_ms);

  // Connection lost: an open dialogue ends as a failure.
  void close();

  GatewayState state() const { return state_; }
  const std::string& id() const { return id_; }
  const std::vector<DialogueLog>& finished() const { return finished_; }
  const Session* session() const { return session_.get(); }

 private:
  std::vector<SessionMessage> after_turn(const Session::Response& r);
  SessionMessage finish(bool success, const std::string& reason);
  void store_log();
  SessionMessage out(MessageKind kind, nlohmann::json payload) const;

  const Resources* res_;
  ProtocolConfig config_;
  Learner* learner_;
  std::string id_;
  GatewayOptions options_;
  GatewayState state_ = GatewayState::idle;
  std::unique_ptr<Session> session_;
  std::uint64_t next_index_ = 0;
  std::int64_t last_activity_ms_ = 0;
  bool stored_ = true;
  std::optional<SystemOutput> last_output_;
  std::vector<DialogueLog> finished_;
};

struct ServeOptions {
  std::string address = "0.0.0.0";
  unsigned short port = 8080;
  std::string static_dir;  // UI bundle served over plain HTTP, empty for none
  std::string out_dir;     // per-connection logs and learned artifacts
  std::string init_dir;    // optional trained run to start each connection from
  std::int64_t idle_timeout_ms = 10 * 60 * 1000;
};

struct StaticFile {
  std::string content_type;
  std::string body;
};

// Resolves an HTTP target inside static_dir; "/" maps to index.html and
// targets escaping the directory are refused.
std::optional<StaticFile> load_static(const std::string& static_dir, std::string target);

// WebSocket sessions on /ws, static files elsewhere. Binds on construction,
// so port 0 picks a free port.
class Server {
 public:
  Server(const Resources& res, const ProtocolConfig& config, const ServeOptions& options);
  ~Server();
  unsigned short port() const;
  void run();   // blocks until stop()
  void stop();  // safe from any thread

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks serving until the process is stopped.
void serve(const Resources& res, const ProtocolConfig& config, const ServeOptions& options);

}  // namespace dialearn
