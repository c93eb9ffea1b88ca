#include "gatekeeper/controller_server.hpp"

#include <chrono>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper {

using nlohmann::json;
using protocol::make_message;
using protocol::Message;
using protocol::MessageType;
using protocol::Role;

NotifierRegistry::NotifierRegistry(int ack_timeout_ms) : ack_timeout_ms_(ack_timeout_ms) {}

void NotifierRegistry::attach(std::shared_ptr<net::Connection> connection) {
  std::lock_guard lock(mutex_);
  connection_ = std::move(connection);
}

void NotifierRegistry::detach(const net::Connection* connection) {
  std::lock_guard lock(mutex_);
  if (connection_.get() != connection) return;
  connection_.reset();
  for (auto& [_, p] : pending_) {
    if (!p.done) {
      p.done = true;
      p.error = "notifier disconnected";
    }
  }
  cv_.notify_all();
}

bool NotifierRegistry::attached() const {
  std::lock_guard lock(mutex_);
  return connection_ != nullptr;
}

void NotifierRegistry::on_ack(const Message& ack) {
  std::lock_guard lock(mutex_);
  auto it = pending_.find(ack.payload.value("id", ""));
  if (it == pending_.end()) return;
  it->second.done = true;
  it->second.ok = ack.payload.value("ok", false);
  it->second.receipt_id = ack.payload.value("receiptId", it->first);
  it->second.error = ack.payload.value("error", "notifier reported failure");
  cv_.notify_all();
}

DeliveryReceipt NotifierRegistry::dispatch(const Notification& notification) {
  std::unique_lock lock(mutex_);
  if (!connection_) throw Error(ErrorCode::kDispatch, "no notifier client connected");
  const std::string id = "n" + std::to_string(next_id_++);
  pending_[id];
  auto connection = connection_;
  lock.unlock();

  try {
    connection->send(make_message(MessageType::kNotify, Role::kController, std::nullopt,
                                  {{"id", id},
                                   {"targetKind", to_string(notification.target_kind)},
                                   {"target", notification.target},
                                   {"text", notification.text}}));
  } catch (const Error& e) {
    lock.lock();
    pending_.erase(id);
    throw Error(ErrorCode::kDispatch, std::string("notifier unreachable: ") + e.what());
  }

  lock.lock();
  const bool answered = cv_.wait_for(lock, std::chrono::milliseconds(ack_timeout_ms_),
                                     [&] { return pending_[id].done; });
  Pending result = pending_[id];
  pending_.erase(id);
  if (!answered) throw Error(ErrorCode::kDispatch, "notifier did not acknowledge in time");
  if (!result.ok) throw Error(ErrorCode::kDispatch, result.error);
  return DeliveryReceipt{result.receipt_id, notification};
}

// ---------------------------------------------------------------------------

ControllerServer::ControllerServer(AccessController& flows, NotifierRegistry& notifiers, ServerConfig config)
    : flows_(flows), notifiers_(notifiers), config_(std::move(config)) {}

ControllerServer::~ControllerServer() { stop(); }

void ControllerServer::start() {
  listener_ = std::make_unique<net::Listener>(config_.bind);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  logger()->info("controller listening on {}:{}", config_.bind.host, listener_->port());
}

void ControllerServer::stop() {
  if (!running_.exchange(false)) return;
  listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (auto& c : connections_) c->shutdown();
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

std::uint16_t ControllerServer::port() const { return listener_ ? listener_->port() : 0; }

bool ControllerServer::door_connected() const {
  std::lock_guard lock(mutex_);
  return door_ != nullptr;
}

std::vector<Message> ControllerServer::door_log() const {
  std::lock_guard lock(mutex_);
  return door_log_;
}

void ControllerServer::accept_loop() {
  while (running_) {
    auto connection = listener_->accept(200);
    if (!connection) continue;
    std::shared_ptr<net::Connection> shared(std::move(connection));
    std::lock_guard lock(mutex_);
    connections_.push_back(shared);
    workers_.emplace_back([this, shared] { serve(shared); });
  }
}

namespace {

// Media never enters the door log.
Message redacted(const Message& m) {
  Message copy = m;
  for (const char* key : {"image", "audio"}) {
    if (copy.payload.contains(key)) copy.payload[key] = "<redacted>";
  }
  return copy;
}

}  // namespace

void ControllerServer::reply(net::Connection& door, Message message) {
  {
    std::lock_guard lock(mutex_);
    door_log_.push_back(redacted(message));
  }
  door.send(message);
}

void ControllerServer::send_error(net::Connection& door, const std::optional<std::string>& session,
                                  const std::string& code, const std::string& text) {
  reply(door, make_message(MessageType::kError, Role::kController, session, {{"code", code}, {"message", text}}));
}

void ControllerServer::serve(std::shared_ptr<net::Connection> connection) {
  net::ReadResult hello = connection->receive(10'000);
  if (hello.status != net::ReadStatus::kMessage || hello.message->type != MessageType::kHello ||
      hello.message->role == Role::kController) {
    try {
      connection->send(make_message(MessageType::kError, Role::kController, std::nullopt,
                                    {{"code", "protocol"}, {"message", "expected HELLO from door or notifier"}}));
    } catch (const Error&) {
    }
    connection->shutdown();
    return;
  }
  const Role role = hello.message->role;

  bool accepted = false;
  {
    std::lock_guard lock(mutex_);
    if (role == Role::kDoorUnit && door_ == nullptr) {
      door_ = connection.get();
      accepted = true;
    }
  }
  if (role == Role::kNotifier && !notifiers_.attached()) {
    notifiers_.attach(connection);
    accepted = true;
  }
  try {
    if (!accepted) {
      connection->send(make_message(MessageType::kError, Role::kController, std::nullopt,
                                    {{"code", "busy"}, {"message", std::string(to_string(role)) + " already connected"}}));
      connection->shutdown();
      return;
    }
    connection->send(make_message(MessageType::kHello, Role::kController, std::nullopt, {{"role", "controller"}}));
  } catch (const Error&) {
    connection->shutdown();
  }
  logger()->info("{} client connected", to_string(role));

  net::pump(*connection, Role::kController, config_.heartbeat, [&](const Message& m) {
    try {
      if (m.role != role) {
        send_error(*connection, m.session, "authority", "role does not match the connection");
        return;
      }
      if (role == Role::kNotifier) {
        if (m.type == MessageType::kNotifyAck) {
          notifiers_.on_ack(m);
        } else if (m.type != MessageType::kError) {
          connection->send(make_message(MessageType::kError, Role::kController, m.session,
                                        {{"code", "authority"}, {"message", "notifier may only acknowledge"}}));
        }
        return;
      }
      handle_door(*connection, m);
    } catch (const Error& e) {
      logger()->warn("dropping {} client: {}", to_string(role), e.what());
      connection->shutdown();
    }
  });

  logger()->info("{} client disconnected", to_string(role));
  if (role == Role::kNotifier) {
    notifiers_.detach(connection.get());
    return;
  }
  std::optional<std::string> orphan;
  {
    std::lock_guard lock(mutex_);
    door_ = nullptr;
    orphan.swap(door_session_);
  }
  // Fail closed: whatever the door unit was doing is over.
  if (orphan) flows_.abort_session(*orphan, "door unit disconnected");
}

void ControllerServer::respond_to_outcome(net::Connection& door, const std::string& session,
                                          const StepOutcome& out, MessageType request) {
  const auto msg = [&](MessageType type, json payload) {
    return make_message(type, Role::kController, session, std::move(payload));
  };
  switch (out.kind) {
    case OutcomeKind::kChallengeIssued:
    case OutcomeKind::kNewChallenge:
      if (request == MessageType::kCodeSubmit) {
        reply(door, msg(MessageType::kCodeResult, {{"ok", false}, {"attemptsRemaining", out.attempts_remaining}}));
      }
      reply(door, msg(MessageType::kCodeChallenge,
                      {{"challengeId", out.challenge_id}, {"attemptsRemaining", out.attempts_remaining}}));
      break;
    case OutcomeKind::kDenied:
      reply(door, msg(MessageType::kAuthResult, {{"accepted", false}}));
      break;
    case OutcomeKind::kUnlocked:
      reply(door, msg(MessageType::kCodeResult,
                      {{"ok", true}, {"employeeName", out.employee_name}, {"welcome", out.message}}));
      reply(door, msg(MessageType::kUnlockEvent,
                      {{"windowStart", out.unlock->start}, {"windowEnd", out.unlock->end}}));
      break;
    case OutcomeKind::kLockedOut:
      reply(door, msg(MessageType::kCodeResult, {{"ok", false}, {"lockedOut", true}, {"attemptsRemaining", 0}}));
      break;
    case OutcomeKind::kExpired:
      reply(door, msg(MessageType::kCodeResult, {{"ok", false}, {"expired", true}, {"attemptsRemaining", 0}}));
      break;
    case OutcomeKind::kGuestNotified:
      reply(door, msg(MessageType::kGuestResult, {{"notified", true}, {"employeeName", out.employee_name}}));
      break;
    case OutcomeKind::kConfirmRequested:
      reply(door, msg(MessageType::kGuestMatch,
                      {{"band", "confirm"}, {"score", out.score}, {"candidateName", out.employee_name}}));
      break;
    case OutcomeKind::kRetryPrompt:
      reply(door, msg(MessageType::kGuestMatch, {{"band", "retry"}, {"score", out.score}}));
      break;
    case OutcomeKind::kBackToUtterance:
      reply(door, msg(MessageType::kGuestResult, {{"notified", false}}));
      break;
    case OutcomeKind::kDeliveryNotified:
      reply(door, msg(MessageType::kDelivery, {{"notified", true}}));
      break;
    case OutcomeKind::kError:
      send_error(door, session, "session", out.message);
      break;
  }
  if (is_terminal(out.state)) {
    std::lock_guard lock(mutex_);
    if (door_session_ == session) door_session_.reset();
  }
}

void ControllerServer::handle_door(net::Connection& door, const Message& m) {
  {
    std::lock_guard lock(mutex_);
    door_log_.push_back(redacted(m));
  }
  const std::string session = m.session.value_or("");
  try {
    switch (m.type) {
      case MessageType::kSessionStart: {
        const AccessSession s = flows_.start_session(parse_session_kind(m.payload["kind"].get<std::string>()));
        {
          std::lock_guard lock(mutex_);
          door_session_ = s.session_id;
        }
        reply(door, make_message(MessageType::kSessionStart, Role::kController, s.session_id,
                                 {{"kind", to_string(s.kind)}, {"state", to_string(s.state)}}));
        break;
      }
      case MessageType::kCaptureUpload: {
        Bytes encrypted;
        try {
          encrypted = base64_decode(m.payload["image"].get_ref<const std::string&>());
        } catch (const Error&) {
          encrypted.clear();  // undecodable upload fails like an undecryptable one
        }
        const StepOutcome out = flows_.handle_capture(session, encrypted);
        wipe(encrypted);
        respond_to_outcome(door, session, out, m.type);
        break;
      }
      case MessageType::kCodeSubmit:
        respond_to_outcome(door, session, flows_.submit_code(session, m.payload["code"].get<std::string>()), m.type);
        break;
      case MessageType::kGuestAudio: {
        Bytes audio;
        try {
          audio = base64_decode(m.payload["audio"].get_ref<const std::string&>());
        } catch (const Error&) {
          audio.clear();
        }
        const StepOutcome out = flows_.handle_utterance(session, audio);
        wipe(audio);
        respond_to_outcome(door, session, out, m.type);
        break;
      }
      case MessageType::kGuestConfirm:
        respond_to_outcome(door, session, flows_.confirm_guest(session, m.payload["answer"] == "yes"), m.type);
        break;
      case MessageType::kDelivery:
        respond_to_outcome(door, session, flows_.handle_delivery(session), m.type);
        break;
      case MessageType::kError:
        if (m.session) {
          flows_.abort_session(session, m.payload.value("message", "door unit error"));
          std::lock_guard lock(mutex_);
          if (door_session_ == session) door_session_.reset();
        }
        break;
      default:
        send_error(door, m.session, "authority",
                   std::string(protocol::to_string(m.type)) + " is not accepted from the door unit");
        break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    send_error(door, m.session, std::string(to_string(e.code())), e.what());
  }
}

// ---------------------------------------------------------------------------

NotifierBot::NotifierBot(const net::Endpoint& controller, NotificationSink& sink, net::HeartbeatConfig heartbeat)
    : sink_(sink), client_(std::make_unique<net::Client>(controller, Role::kNotifier, heartbeat)) {
  client_->set_handler([this](const Message& m) {
    if (m.type != MessageType::kNotify) return;
    const std::string id = m.payload["id"].get<std::string>();
    json ack{{"id", id}};
    try {
      Notification n{parse_target_kind(m.payload["targetKind"].get<std::string>()),
                     m.payload["target"].get<std::string>(), m.payload["text"].get<std::string>(), 0};
      const DeliveryReceipt receipt = sink_.dispatch(n);
      ack["ok"] = true;
      ack["receiptId"] = receipt.id;
    } catch (const std::exception& e) {
      ack["ok"] = false;
      ack["error"] = e.what();
    }
    try {
      client_->send(make_message(MessageType::kNotifyAck, Role::kNotifier, std::nullopt, ack));
    } catch (const Error&) {
    }
  });
}

NotifierBot::~NotifierBot() { client_->close(); }

}  // namespace gatekeeper
