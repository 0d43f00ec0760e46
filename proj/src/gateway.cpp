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


#include "dialearn/gateway.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

namespace dialearn {

namespace {

constexpr std::array<const char*, 9> kKindNames = {
    "session_start", "system_utterance", "user_utterance", "annotation_request", "annotation_response",
    "social_feedback", "dialogue_end", "survey", "error"};

}  // namespace

const char* to_string(MessageKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

MessageKind message_kind_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (s == kKindNames[i]) return static_cast<MessageKind>(i);
  throw ProtocolError("unknown message kind '" + s + "'");
}

nlohmann::json message_to_json(const SessionMessage& m) {
  return {{"kind", to_string(m.kind)}, {"session", m.session}, {"payload", m.payload}};
}

SessionMessage message_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ProtocolError("message must be an object with a string 'kind'");
  SessionMessage m;
  m.kind = message_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("session")) {
    if (!j.at("session").is_string()) throw ProtocolError("'session' must be a string");
    m.session = j.at("session").get<std::string>();
  }
  if (j.contains("payload")) {
    if (!j.at("payload").is_object()) throw ProtocolError("'payload' must be an object");
    m.payload = j.at("payload");
  }
  return m;
}

bool valid_raw_feedback(double raw) {
  if (!(std::abs(raw) <= 2.0)) return false;
  const double twice = raw * 2.0;
  return twice == std::round(twice);
}

double snap_feedback(double raw) {
  if (!valid_raw_feedback(raw)) throw ProtocolError("feedback must lie in [-2, 2] in steps of 0.5");
  const double x = raw / 2.0;
  double best = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (double v : kPsiDomain) {
    const double d = std::abs(v - x);
    if (d < best_dist || (d == best_dist && std::abs(v) < std::abs(best))) {
      best = v;
      best_dist = d;
    }
  }
  return best;
}

const char* to_string(GatewayState s) {
  switch (s) {
    case GatewayState::idle: return "idle";
    case GatewayState::active: return "active";
    case GatewayState::awaiting_annotation: return "awaiting_annotation";
    case GatewayState::ended: return "ended";
  }
  return "idle";
}

bool inbound_allowed(GatewayState state, MessageKind kind) {
  switch (state) {
    case GatewayState::idle: return kind == MessageKind::session_start;
    case GatewayState::active:
      return kind == MessageKind::user_utterance || kind == MessageKind::social_feedback ||
             kind == MessageKind::dialogue_end;
    case GatewayState::awaiting_annotation: return kind == MessageKind::annotation_response;
    case GatewayState::ended: return kind == MessageKind::survey;
  }
  return false;
}

GatewaySession::GatewaySession(const Resources& res, ProtocolConfig config, Learner& learner, std::string id,
                               GatewayOptions options)
    : res_(&res), config_(std::move(config)), learner_(&learner), id_(std::move(id)), options_(std::move(options)) {
  config_.check();
}

SessionMessage GatewaySession::out(MessageKind kind, nlohmann::json payload) const {
  return SessionMessage{kind, id_, std::move(payload)};
}

std::vector<SessionMessage> GatewaySession::after_turn(const Session::Response& r) {
  std::vector<SessionMessage> msgs;
  if (r.request) {
    state_ = GatewayState::awaiting_annotation;
    auto payload = request_to_json(*r.request);
    payload["mode"] = r.request->kind == AdaptationAction::AskConfirm ? "confirm" : "full";
    msgs.push_back(out(MessageKind::annotation_request, std::move(payload)));
    return msgs;
  }
  state_ = GatewayState::active;
  last_output_ = *r.system;
  msgs.push_back(out(MessageKind::system_utterance, {{"text", r.system->text},
                                                     {"act", r.system->act.str()},
                                                     {"summary", to_string(r.system->summary)},
                                                     {"turn", session_->system_turns()}}));
  if (!r.system->is_bye() && session_->system_turns() >= config_.max_system_turns)
    msgs.push_back(finish(false, "cap"));
  return msgs;
}

SessionMessage GatewaySession::finish(bool success, const std::string& reason) {
  const auto& log = session_->end(success, reason);
  state_ = GatewayState::ended;
  stored_ = false;
  if (!options_.artifacts_dir.empty()) save_learner(*learner_, config_, options_.artifacts_dir);
  return out(MessageKind::dialogue_end, {{"success", success},
                                         {"reason", reason},
                                         {"cumulative_reward", log.cumulative_reward}});
}

void GatewaySession::store_log() {
  if (stored_ || !session_) return;
  stored_ = true;
  finished_.push_back(session_->log());
  if (!options_.log_path.empty()) append_log(session_->log(), options_.log_path);
}

std::vector<SessionMessage> GatewaySession::handle(const SessionMessage& in, std::int64_t now_ms) {
  if (!in.session.empty() && state_ != GatewayState::idle && in.session != id_)
    throw ProtocolError("message for session '" + in.session + "' on session '" + id_ + "'");
  if (!inbound_allowed(state_, in.kind))
    throw ProtocolError(std::string("'") + to_string(in.kind) + "' is not allowed while " + to_string(state_));
  last_activity_ms_ = now_ms;
  const auto& p = in.payload;
  try {
    switch (in.kind) {
      case MessageKind::session_start: {
        const std::uint64_t index = p.contains("dialogue") ? p.at("dialogue").get<std::uint64_t>() : next_index_;
        next_index_ = index + 1;
        session_ = std::make_unique<Session>(*res_, config_, *learner_, dialogue_id(config_, index),
                                             session_seed(config_, index));
        const auto first = session_->start();
        return after_turn(Session::Response{std::nullopt, first});
      }
      case MessageKind::user_utterance: {
        if (!p.contains("text") || !p.at("text").is_string()) throw ProtocolError("user_utterance needs 'text'");
        UserInput input;
        input.text = p.at("text").get<std::string>();
        if (p.contains("asr_text")) input.asr_text = p.at("asr_text").get<std::string>();
        if (p.contains("oracle")) input.oracle = parse_da(p.at("oracle").get<std::string>(), &res_->onto);
        return after_turn(session_->user_turn(input));
      }
      case MessageKind::annotation_response:
        return after_turn(session_->annotation_response(outcome_from_json(p)));
      case MessageKind::social_feedback: {
        if (!p.contains("value") || !p.at("value").is_number()) throw ProtocolError("social_feedback needs 'value'");
        const double raw = p.at("value").get<double>();
        session_->social_feedback(snap_feedback(raw), raw);
        return {};
      }
      case MessageKind::dialogue_end: {
        if (!p.contains("success") || !p.at("success").is_boolean())
          throw ProtocolError("dialogue_end needs a boolean 'success'");
        std::string reason = p.value("reason", std::string());
        if (reason.empty()) reason = last_output_ && last_output_->is_bye() ? "system_bye" : "user_end";
        return {finish(p.at("success").get<bool>(), reason)};
      }
      case MessageKind::survey:
        session_->attach_survey(p);
        store_log();
        state_ = GatewayState::idle;
        return {};
      default:
        break;
    }
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("bad ") + to_string(in.kind) + ": " + e.what());
  }
  throw ProtocolError(std::string("unexpected ") + to_string(in.kind));
}

std::optional<SessionMessage> GatewaySession::check_timeout(std::int64_t now_ms) {
  if (state_ != GatewayState::active && state_ != GatewayState::awaiting_annotation) return std::nullopt;
  if (now_ms - last_activity_ms_ < options_.idle_timeout_ms) return std::nullopt;
  auto msg = finish(false, "timeout");
  store_log();
  return msg;
}

void GatewaySession::close() {
  if (state_ == GatewayState::active || state_ == GatewayState::awaiting_annotation) finish(false, "disconnect");
  store_log();
}

// ---------------------------------------------------------------------------
// Transport

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string mime_type(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

struct ServerContext {
  const Resources* res;
  ProtocolConfig config;
  ServeOptions options;
  std::uint64_t connections = 0;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, ServerContext& ctx, std::string id)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), ctx_(ctx), id_(std::move(id)) {
    learner_ = ctx.options.init_dir.empty() ? Learner::make(*ctx.res, ctx.config)
                                            : load_learner(*ctx.res, ctx.config, ctx.options.init_dir);
    GatewayOptions g;
    g.idle_timeout_ms = ctx.options.idle_timeout_ms;
    if (!ctx.options.out_dir.empty()) {
      const auto dir = std::filesystem::path(ctx.options.out_dir) / id_;
      std::filesystem::create_directories(dir);
      g.log_path = (dir / "logs.jsonl").string();
      g.artifacts_dir = dir.string();
    }
    gateway_ = std::make_unique<GatewaySession>(*ctx.res, ctx.config, learner_, id_, g);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    arm_timer();
    read();
  }

  void arm_timer() {
    timer_.expires_after(std::chrono::seconds(5));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      if (auto msg = self->gateway_->check_timeout(now_ms())) {
        self->send(message_to_json(*msg).dump());
        self->closing_ = true;
        return;
      }
      self->arm_timer();
    });
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      timer_.cancel();
      gateway_->close();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      const auto msg = message_from_json(nlohmann::json::parse(text));
      for (const auto& m : gateway_->handle(msg, now_ms())) send(message_to_json(m).dump());
    } catch (const std::exception& e) {
      send(message_to_json(SessionMessage{MessageKind::error, id_, {{"message", e.what()}}}).dump());
      closing_ = true;
      return;
    }
    read();
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    queue_.pop_front();
    if (!queue_.empty()) return write();
    if (closing_) {
      timer_.cancel();
      gateway_->close();
      ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  ServerContext& ctx_;
  std::string id_;
  Learner learner_;
  std::unique_ptr<GatewaySession> gateway_;
  bool closing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, ServerContext& ctx) : stream_(std::move(socket)), ctx_(ctx) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/ws") return;
      stream_.expires_never();
      const std::string id = "c" + std::to_string(++ctx_.connections);
      try {
        std::make_shared<WsConnection>(stream_.release_socket(), ctx_, id)->run(std::move(req_));
      } catch (const std::exception& e) {
        std::clog << "connection " << id << " refused: " << e.what() << '\n';
      }
      return;
    }
    respond();
  }

  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    const auto file = req_.method() == http::verb::get
                          ? load_static(ctx_.options.static_dir, std::string(req_.target()))
                          : std::nullopt;
    if (!file) {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    } else {
      res->result(http::status::ok);
      res->set(http::field::content_type, file->content_type);
      res->body() = file->body;
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  ServerContext& ctx_;
};

void accept_loop(tcp::acceptor& acceptor, ServerContext& ctx) {
  acceptor.async_accept([&acceptor, &ctx](beast::error_code ec, tcp::socket socket) {
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), ctx)->run();
    accept_loop(acceptor, ctx);
  });
}

}  // namespace

std::optional<StaticFile> load_static(const std::string& static_dir, std::string target) {
  if (static_dir.empty()) return std::nullopt;
  if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
  if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) return std::nullopt;
  if (target.back() == '/') target += "index.html";
  const auto path = std::filesystem::path(static_dir) / target.substr(1);
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  StaticFile f;
  f.content_type = mime_type(path.string());
  f.body.assign(std::istreambuf_iterator<char>(in), {});
  return f;
}

struct Server::Impl {
  ServerContext ctx;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
};

Server::Server(const Resources& res, const ProtocolConfig& config, const ServeOptions& options)
    : impl_(std::make_unique<Impl>()) {
  impl_->ctx = ServerContext{&res, config, options};
  auto& acceptor = impl_->acceptor;
  const tcp::endpoint ep(net::ip::make_address(options.address), options.port);
  acceptor.open(ep.protocol());
  acceptor.set_option(net::socket_base::reuse_address(true));
  acceptor.bind(ep);
  acceptor.listen();
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  std::clog << "serving " << to_string(impl_->ctx.config.protocol) << " sessions on ws://"
            << impl_->ctx.options.address << ':' << port() << "/ws\n";
  accept_loop(impl_->acceptor, impl_->ctx);
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

void serve(const Resources& res, const ProtocolConfig& config, const ServeOptions& options) {
  Server(res, config, options).run();
}

}  // namespace dialearn
