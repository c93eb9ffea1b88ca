#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "gatekeeper/clock.hpp"
#include "gatekeeper/protocol.hpp"

namespace gatekeeper::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port"; throws Error(kInvalidArgument) otherwise.
Endpoint parse_endpoint(std::string_view text);

enum class ReadStatus { kMessage, kInvalid, kTimeout, kClosed };

struct ReadResult {
  ReadStatus status = ReadStatus::kClosed;
  std::optional<protocol::Message> message;
  std::string error;
};

// One framed TCP stream. Writes are serialized; reads must come from a
// single thread.
class Connection {
 public:
  explicit Connection(int fd);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Throws Error(kIo) if the peer is gone.
  void send(const protocol::Message& message);
  void send_raw(ByteView bytes);
  // Waits up to timeout_ms (negative: forever) for the next frame.
  ReadResult receive(int timeout_ms);
  // Unblocks a pending receive() and fails further sends.
  void shutdown();
  bool is_open() const { return open_.load(); }

 private:
  int fd_;
  std::atomic<bool> open_{true};
  std::mutex write_mutex_;
  Bytes buffer_;
};

// Throws Error(kIo) when the connection cannot be made.
std::unique_ptr<Connection> connect_tcp(const Endpoint& endpoint, int timeout_ms = 5000);

class Listener {
 public:
  explicit Listener(const Endpoint& endpoint);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  // nullptr on timeout or after close().
  std::unique_ptr<Connection> accept(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> open_{true};
};

struct HeartbeatConfig {
  int interval_ms = 15'000;
  int max_missed = 3;
};

// Reads frames until the peer closes or goes silent. PING is answered with
// PONG and PONG is swallowed; after `max_missed` idle intervals without any
// inbound frame the connection is shut down. Invalid frames are answered
// with ERROR and the connection is kept.
void pump(Connection& connection, protocol::Role own_role, const HeartbeatConfig& heartbeat,
          const std::function<void(const protocol::Message&)>& on_message);

// A client connection with a background reader feeding a queue: the door
// unit, the notifier bot and the replay harness all talk this way.
class Client {
 public:
  // Connects and exchanges HELLO. Throws Error(kIo) or Error(kProtocol) when
  // the controller refuses the role.
  Client(const Endpoint& endpoint, protocol::Role role, HeartbeatConfig heartbeat = {});
  ~Client();

  void send(const protocol::Message& message);
  // Next non-heartbeat message, or nullopt on timeout / disconnect.
  std::optional<protocol::Message> next(int timeout_ms);
  bool connected() const { return connection_->is_open(); }
  void close();
  protocol::Role role() const { return role_; }

  // Optional push-mode: when set, messages are delivered to the callback on
  // the reader thread instead of the queue.
  void set_handler(std::function<void(const protocol::Message&)> handler);

 private:
  protocol::Role role_;
  std::unique_ptr<Connection> connection_;
  std::thread reader_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<protocol::Message> inbox_;
  std::function<void(const protocol::Message&)> handler_;
  bool closed_ = false;
};

}  // namespace gatekeeper::net
