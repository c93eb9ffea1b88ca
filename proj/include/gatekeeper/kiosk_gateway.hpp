#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "gatekeeper/doorunit.hpp"
#include "gatekeeper/net.hpp"

namespace gatekeeper::door {

struct GatewayConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  // Static UI assets. Empty: a built-in placeholder page.
  std::filesystem::path ui_dir;
};

// HTTP server for the kiosk page plus the WebSocket endpoint /kiosk that
// carries KioskEvent JSON both ways. Only one kiosk may be connected; a
// second upgrade request is answered with 409.
class KioskGateway {
 public:
  KioskGateway(DoorUnit& door, GatewayConfig config);
  ~KioskGateway();
  KioskGateway(const KioskGateway&) = delete;
  KioskGateway& operator=(const KioskGateway&) = delete;

  // Binds, wires itself in as the door unit's UI and serves on a
  // background thread.
  void start();
  void stop();
  std::uint16_t port() const;
  bool ui_connected() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};


struct LinkConfig {
  net::Endpoint controller;
  net::HeartbeatConfig heartbeat;
  int initial_backoff_ms = 500;
  int max_backoff_ms = 8000;
};

// Keeps the door unit connected to the controller. While the controller is
// unreachable the kiosk shows the out-of-service screen and the link retries
// with exponential backoff.
class ControllerLink {
 public:
  ControllerLink(DoorUnit& door, LinkConfig config);
  ~ControllerLink();

  void start();
  void stop();
  bool connected() const { return connected_.load(); }

 private:
  void run();

  DoorUnit& door_;
  LinkConfig config_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<bool> connected_{false};
  std::mutex mutex_;
  std::condition_variable cv_;
};

}  // namespace gatekeeper::door
