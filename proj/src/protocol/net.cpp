#include "gatekeeper/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper::net {

using protocol::Message;
using protocol::MessageType;
using protocol::Role;

namespace {

using SteadyTime = std::chrono::steady_clock::time_point;

int remaining_ms(SteadyTime deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected host:port, got '" + std::string(text) + "'");
  }
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  try {
    const int port = std::stoi(std::string(text.substr(colon + 1)));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    e.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "invalid port in '" + std::string(text) + "'");
  }
  return e;
}

// ---------------------------------------------------------------------------

Connection::Connection(int fd) : fd_(fd) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Connection::~Connection() {
  shutdown();
  ::close(fd_);
}

void Connection::shutdown() {
  if (open_.exchange(false)) ::shutdown(fd_, SHUT_RDWR);
}

void Connection::send(const Message& message) { send_raw(protocol::encode_frame(message)); }

void Connection::send_raw(ByteView bytes) {
  std::lock_guard lock(write_mutex_);
  if (!open_) throw Error(ErrorCode::kIo, "connection closed");
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

ReadResult Connection::receive(int timeout_ms) {
  const SteadyTime deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(std::max(timeout_ms, 0));
  for (;;) {
    const auto decoded = protocol::decode_frame(buffer_);
    switch (decoded.status) {
      case protocol::DecodeStatus::kMessage:
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.consumed));
        return {ReadStatus::kMessage, decoded.message, {}};
      case protocol::DecodeStatus::kInvalid:
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.consumed));
        return {ReadStatus::kInvalid, std::nullopt, decoded.error};
      case protocol::DecodeStatus::kFatal:
        shutdown();
        return {ReadStatus::kClosed, std::nullopt, decoded.error};
      case protocol::DecodeStatus::kNeedMore:
        break;
    }

    pollfd pfd{fd_, POLLIN, 0};
    const int wait = timeout_ms < 0 ? -1 : remaining_ms(deadline);
    const int ready = ::poll(&pfd, 1, wait);
    if (ready < 0) {
      if (errno == EINTR) continue;
      return {ReadStatus::kClosed, std::nullopt, "poll failed: " + errno_text()};
    }
    if (ready == 0) return {ReadStatus::kTimeout, std::nullopt, {}};

    std::uint8_t chunk[64 * 1024];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      open_ = false;
      return {ReadStatus::kClosed, std::nullopt, n == 0 ? "peer closed" : errno_text()};
    }
    buffer_.insert(buffer_.end(), chunk, chunk + n);
  }
}

std::unique_ptr<Connection> connect_tcp(const Endpoint& endpoint, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result); rc != 0) {
    throw Error(ErrorCode::kIo, "cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = result; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, timeout_ms) == 1 ? 0 : -1;
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      if (rc == 0 && err != 0) {
        errno = err;
        rc = -1;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      ::freeaddrinfo(result);
      return std::make_unique<Connection>(fd);
    }
    last_error = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(result);
  throw Error(ErrorCode::kIo, "cannot connect to " + endpoint.host + ":" + port + ": " + last_error);
}

// ---------------------------------------------------------------------------

Listener::Listener(const Endpoint& endpoint) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw Error(ErrorCode::kIo, "socket: " + errno_text());
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  const std::string host = endpoint.host == "localhost" ? "127.0.0.1" : endpoint.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error(ErrorCode::kInvalidArgument, "bind address must be an IPv4 literal: " + endpoint.host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 8) < 0) {
    const std::string why = errno_text();
    ::close(fd_);
    throw Error(ErrorCode::kIo, "cannot listen on " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() {
  close();
  ::close(fd_);
}

void Listener::close() {
  if (open_.exchange(false)) ::shutdown(fd_, SHUT_RDWR);
}

std::unique_ptr<Connection> Listener::accept(int timeout_ms) {
  if (!open_) return nullptr;
  pollfd pfd{fd_, POLLIN, 0};
  if (::poll(&pfd, 1, timeout_ms) != 1 || !open_) return nullptr;
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return nullptr;
  return std::make_unique<Connection>(fd);
}

// ---------------------------------------------------------------------------

void pump(Connection& connection, Role own_role, const HeartbeatConfig& heartbeat,
          const std::function<void(const Message&)>& on_message) {
  int missed = 0;
  while (connection.is_open()) {
    ReadResult r = connection.receive(heartbeat.interval_ms);
    switch (r.status) {
      case ReadStatus::kClosed:
        connection.shutdown();
        return;
      case ReadStatus::kTimeout:
        if (missed >= heartbeat.max_missed) {
          logger()->warn("peer missed {} heartbeats, disconnecting", missed);
          connection.shutdown();
          return;
        }
        ++missed;
        try {
          connection.send(protocol::make_message(MessageType::kPing, own_role));
        } catch (const Error&) {
          return;
        }
        break;
      case ReadStatus::kInvalid:
        missed = 0;
        logger()->warn("rejected frame: {}", r.error);
        try {
          connection.send(protocol::make_message(MessageType::kError, own_role, std::nullopt,
                                                 {{"message", r.error}, {"code", "protocol"}}));
        } catch (const Error&) {
          return;
        }
        break;
      case ReadStatus::kMessage:
        missed = 0;
        if (r.message->type == MessageType::kPing) {
          try {
            connection.send(protocol::make_message(MessageType::kPong, own_role));
          } catch (const Error&) {
            return;
          }
        } else if (r.message->type != MessageType::kPong) {
          on_message(*r.message);
        }
        break;
    }
  }
}

// ---------------------------------------------------------------------------

Client::Client(const Endpoint& endpoint, Role role, HeartbeatConfig heartbeat)
    : role_(role), connection_(connect_tcp(endpoint)) {
  connection_->send(protocol::make_message(MessageType::kHello, role_, std::nullopt,
                                           {{"role", std::string(protocol::to_string(role_))}}));
  for (;;) {
    ReadResult r = connection_->receive(5000);
    if (r.status == ReadStatus::kMessage && r.message->type == MessageType::kHello) break;
    if (r.status == ReadStatus::kMessage && r.message->type == MessageType::kPing) continue;
    std::string why = r.error;
    if (r.message && r.message->type == MessageType::kError) why = r.message->payload.value("message", "");
    connection_->shutdown();
    throw Error(ErrorCode::kProtocol, "controller refused the connection: " + why);
  }

  reader_ = std::thread([this, heartbeat] {
    pump(*connection_, role_, heartbeat, [this](const Message& m) {
      std::function<void(const Message&)> handler;
      {
        std::lock_guard lock(mutex_);
        handler = handler_;
        if (!handler) {
          inbox_.push_back(m);
          cv_.notify_all();
          return;
        }
      }
      handler(m);
    });
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
  });
}

Client::~Client() { close(); }

void Client::close() {
  connection_->shutdown();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
}

void Client::send(const Message& message) { connection_->send(message); }

std::optional<Message> Client::next(int timeout_ms) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms), [this] { return !inbox_.empty() || closed_; });
  if (inbox_.empty()) return std::nullopt;
  Message m = std::move(inbox_.front());
  inbox_.pop_front();
  return m;
}

void Client::set_handler(std::function<void(const Message&)> handler) {
  std::deque<Message> pending;
  {
    std::lock_guard lock(mutex_);
    handler_ = std::move(handler);
    pending.swap(inbox_);
  }
  for (const auto& m : pending) handler_(m);
}

}  // namespace gatekeeper::net
