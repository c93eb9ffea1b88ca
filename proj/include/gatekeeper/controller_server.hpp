#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "gatekeeper/flows.hpp"
#include "gatekeeper/net.hpp"
#include "gatekeeper/notify.hpp"

namespace gatekeeper {

// Notification sink that forwards every notification as a NOTIFY frame to
// the connected notifier client and blocks until its NOTIFY_ACK. With no
// notifier attached, or on a negative/missing ack, dispatch fails.
class NotifierRegistry final : public NotificationSink {
 public:
  explicit NotifierRegistry(int ack_timeout_ms = 5000);

  DeliveryReceipt dispatch(const Notification& notification) override;

  void attach(std::shared_ptr<net::Connection> connection);
  void detach(const net::Connection* connection);
  void on_ack(const protocol::Message& ack);
  bool attached() const;

 private:
  struct Pending {
    bool done = false;
    bool ok = false;
    std::string receipt_id;
    std::string error;
  };

  int ack_timeout_ms_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<net::Connection> connection_;
  std::uint64_t next_id_ = 1;
  std::map<std::string, Pending> pending_;
};

struct ServerConfig {
  net::Endpoint bind{"127.0.0.1", 0};
  net::HeartbeatConfig heartbeat;
};

// The indoor node's TCP service: exactly one door-unit client and one
// notifier client, each identified by its HELLO role.
class ControllerServer {
 public:
  ControllerServer(AccessController& flows, NotifierRegistry& notifiers, ServerConfig config = {});
  ~ControllerServer();

  // Binds and starts accepting in the background.
  void start();
  void stop();
  std::uint16_t port() const;

  bool door_connected() const;
  bool notifier_connected() const { return notifiers_.attached(); }

  // Every message sent to or received from the door unit, in order.
  std::vector<protocol::Message> door_log() const;

 private:
  void accept_loop();
  void serve(std::shared_ptr<net::Connection> connection);
  void handle_door(net::Connection& door, const protocol::Message& message);
  void reply(net::Connection& door, protocol::Message message);
  void send_error(net::Connection& door, const std::optional<std::string>& session,
                  const std::string& code, const std::string& text);
  void respond_to_outcome(net::Connection& door, const std::string& session, const StepOutcome& out,
                          protocol::MessageType request);

  AccessController& flows_;
  NotifierRegistry& notifiers_;
  ServerConfig config_;
  std::unique_ptr<net::Listener> listener_;
  std::thread accept_thread_;
  std::atomic<bool> running_{false};

  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<net::Connection>> connections_;
  std::vector<std::thread> workers_;
  net::Connection* door_ = nullptr;
  std::optional<std::string> door_session_;
  std::vector<protocol::Message> door_log_;
};

// The notifier bot: connects as the notifier role and relays each NOTIFY to
// a local sink (webhook or recording), answering with NOTIFY_ACK.
class NotifierBot {
 public:
  NotifierBot(const net::Endpoint& controller, NotificationSink& sink, net::HeartbeatConfig heartbeat = {});
  ~NotifierBot();
  bool connected() const { return client_->connected(); }
  void close() { client_->close(); }

 private:
  NotificationSink& sink_;
  std::unique_ptr<net::Client> client_;
};

}  // namespace gatekeeper
