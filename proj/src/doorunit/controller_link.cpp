#include <algorithm>

#include "gatekeeper/error.hpp"
#include "gatekeeper/kiosk_gateway.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper::door {

ControllerLink::ControllerLink(DoorUnit& door, LinkConfig config) : door_(door), config_(std::move(config)) {}

ControllerLink::~ControllerLink() { stop(); }

void ControllerLink::start() {
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void ControllerLink::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!running_.exchange(false)) return;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void ControllerLink::run() {
  int backoff = config_.initial_backoff_ms;
  bool announced_down = false;
  while (running_) {
    std::shared_ptr<net::Client> client;
    try {
      client = std::make_shared<net::Client>(config_.controller, protocol::Role::kDoorUnit, config_.heartbeat);
    } catch (const Error& e) {
      if (!announced_down) {
        logger()->warn("controller unreachable: {}", e.what());
        door_.on_controller_lost();
        announced_down = true;
      }
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, std::chrono::milliseconds(backoff), [this] { return !running_; });
      backoff = std::min(backoff * 2, config_.max_backoff_ms);
      continue;
    }

    backoff = config_.initial_backoff_ms;
    announced_down = false;
    door_.set_controller_link([client](const protocol::Message& m) { client->send(m); });
    client->set_handler([this](const protocol::Message& m) { door_.on_controller_message(m); });
    connected_ = true;
    door_.on_controller_connected();

    {
      std::unique_lock lock(mutex_);
      while (running_ && client->connected()) cv_.wait_for(lock, std::chrono::milliseconds(100));
    }
    connected_ = false;
    door_.set_controller_link(nullptr);
    client->close();
    if (running_) {
      door_.on_controller_lost();
      announced_down = true;
    }
  }
}

}  // namespace gatekeeper::door
