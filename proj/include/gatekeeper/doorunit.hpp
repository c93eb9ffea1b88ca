#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gatekeeper/bytes.hpp"
#include "gatekeeper/crypto.hpp"
#include "gatekeeper/protocol.hpp"

namespace gatekeeper::door {

enum class DeviceKind { kCamera, kMicrophone };
std::string_view to_string(DeviceKind kind);

class CaptureDevice {
 public:
  virtual ~CaptureDevice() = default;
  virtual DeviceKind kind() const = 0;
  // Throws Error(kDevice) when nothing can be captured.
  virtual Bytes capture() = 0;
};

// Replays files in a fixed order, wrapping around.
class FileBackedDevice final : public CaptureDevice {
 public:
  FileBackedDevice(DeviceKind kind, std::vector<std::filesystem::path> files);
  // Regular files of `dir` sorted by name. A missing directory gives an empty
  // device, which fails on capture.
  static FileBackedDevice from_directory(DeviceKind kind, const std::filesystem::path& dir);

  DeviceKind kind() const override { return kind_; }
  Bytes capture() override;
  std::size_t size() const { return files_.size(); }

 private:
  DeviceKind kind_;
  std::vector<std::filesystem::path> files_;
  std::size_t next_ = 0;
};

// Placeholder for real camera/microphone drivers.
class LiveDevice final : public CaptureDevice {
 public:
  explicit LiveDevice(DeviceKind kind) : kind_(kind) {}
  DeviceKind kind() const override { return kind_; }
  Bytes capture() override;

 private:
  DeviceKind kind_;
};

// ---------------------------------------------------------------------------
// Kiosk contract

enum class Direction { kToUi, kFromUi };

struct KioskEvent {
  Direction direction = Direction::kToUi;
  std::string name;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const KioskEvent&) const = default;
};

inline constexpr std::string_view kFromUiNames[] = {"pressEmployee", "pressGuest", "pressDelivery", "keypadSubmit",
                                                    "confirmYes",    "confirmNo",  "recordDone"};
inline constexpr std::string_view kToUiNames[] = {"showMainMenu", "promptCapture", "promptCode", "showWelcome",
                                                  "showDenied",   "promptSpeak",   "askConfirm", "showNotified",
                                                  "showRetry",    "showError"};

bool is_from_ui_name(std::string_view name);
bool is_to_ui_name(std::string_view name);

// {"direction":"toUi"|"fromUi","name":...,"payload":{...}}
nlohmann::json to_json(const KioskEvent& event);
// Throws Error(kProtocol) on unknown names or a name on the wrong side.
KioskEvent kiosk_event_from_json(const nlohmann::json& doc);

KioskEvent to_ui(std::string name, nlohmann::json payload = nlohmann::json::object());
KioskEvent from_ui(std::string name, nlohmann::json payload = nlohmann::json::object());

// True when the event sequence, starting at the main menu, follows the GUI
// flowcharts. Button presses made while a session is running are queued and
// do not change the screen.
bool is_valid_ui_trace(const std::vector<KioskEvent>& trace);

// ---------------------------------------------------------------------------
// Door unit core

// One line of the door unit's own audit log: either a kiosk event or a
// device capture.
struct DoorLogEntry {
  enum class Kind { kKiosk, kCapture } kind = Kind::kKiosk;
  KioskEvent event;
  DeviceKind device = DeviceKind::kCamera;
};

// Every capture is preceded by its own, not yet used, trigger: pressEmployee
// for the camera and recordDone for the microphone.
bool captures_have_consent(const std::vector<DoorLogEntry>& log);

struct DoorUnitConfig {
  std::size_t max_queued_presses = 4;
};

// The thin client: turns kiosk events into protocol messages and controller
// replies back into kiosk events. It holds no directory data or thresholds.
// Kiosk and controller events are serialized through one mutex.
class DoorUnit {
 public:
  using SendFn = std::function<void(const protocol::Message&)>;
  using EmitFn = std::function<void(const KioskEvent&)>;

  DoorUnit(CaptureDevice& camera, CaptureDevice& microphone, CipherKey key, DoorUnitConfig config = {});

  // Outbound channels. Without a controller link every request fails with
  // showError.
  void set_controller_link(SendFn send);
  void set_ui(EmitFn emit);

  void on_ui_event(const KioskEvent& event);
  void on_controller_message(const protocol::Message& message);

  // The kiosk (re)connected: show the menu.
  void on_ui_connected();
  // The kiosk went away: any running session is aborted.
  void on_ui_disconnected();
  void on_controller_connected();
  void on_controller_lost();

  std::optional<std::string> session() const;
  std::vector<DoorLogEntry> log() const;
  std::vector<KioskEvent> ui_trace() const;

 private:
  void emit(KioskEvent event);
  void send(const protocol::Message& message);
  void handle_ui(const KioskEvent& event);
  void start_session(const std::string& kind);
  void upload_capture();
  void record_and_upload();
  void abort(const std::string& why);
  void finish();
  Bytes capture(CaptureDevice& device);

  CaptureDevice& camera_;
  CaptureDevice& microphone_;
  CipherKey key_;
  DoorUnitConfig config_;
  SendFn send_;
  EmitFn emit_;

  mutable std::recursive_mutex mutex_;
  std::optional<std::string> requested_kind_;
  std::optional<std::string> session_;
  std::string session_kind_;
  std::deque<KioskEvent> queued_;
  bool controller_up_ = true;
  std::vector<DoorLogEntry> log_;
};

}  // namespace gatekeeper::door
