#include "gatekeeper/doorunit.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper::door {

using nlohmann::json;
using protocol::make_message;
using protocol::Message;
using protocol::MessageType;
using protocol::Role;

std::string_view to_string(DeviceKind kind) { return kind == DeviceKind::kCamera ? "camera" : "microphone"; }

FileBackedDevice::FileBackedDevice(DeviceKind kind, std::vector<std::filesystem::path> files)
    : kind_(kind), files_(std::move(files)) {}

FileBackedDevice FileBackedDevice::from_directory(DeviceKind kind, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return FileBackedDevice(kind, std::move(files));
}

Bytes FileBackedDevice::capture() {
  if (files_.empty()) throw Error(ErrorCode::kDevice, std::string(to_string(kind_)) + " has no source files");
  const auto& path = files_[next_];
  next_ = (next_ + 1) % files_.size();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kDevice, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Bytes LiveDevice::capture() {
  throw Error(ErrorCode::kDevice, "no live " + std::string(to_string(kind_)) + " driver in this build");
}

// ---------------------------------------------------------------------------

bool is_from_ui_name(std::string_view name) {
  return std::find(std::begin(kFromUiNames), std::end(kFromUiNames), name) != std::end(kFromUiNames);
}

bool is_to_ui_name(std::string_view name) {
  return std::find(std::begin(kToUiNames), std::end(kToUiNames), name) != std::end(kToUiNames);
}

json to_json(const KioskEvent& event) {
  return {{"direction", event.direction == Direction::kToUi ? "toUi" : "fromUi"},
          {"name", event.name},
          {"payload", event.payload}};
}

KioskEvent kiosk_event_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kProtocol, "kiosk event must be a JSON object");
  KioskEvent e;
  const auto name = doc.find("name");
  if (name == doc.end() || !name->is_string()) throw Error(ErrorCode::kProtocol, "kiosk event needs a 'name'");
  e.name = name->get<std::string>();
  const std::string dir = doc.value("direction", "fromUi");
  if (dir == "toUi") {
    e.direction = Direction::kToUi;
  } else if (dir == "fromUi") {
    e.direction = Direction::kFromUi;
  } else {
    throw Error(ErrorCode::kProtocol, "unknown kiosk direction '" + dir + "'");
  }
  const bool known = e.direction == Direction::kToUi ? is_to_ui_name(e.name) : is_from_ui_name(e.name);
  if (!known) throw Error(ErrorCode::kProtocol, "unknown " + dir + " kiosk event '" + e.name + "'");
  if (auto p = doc.find("payload"); p != doc.end() && !p->is_null()) {
    if (!p->is_object()) throw Error(ErrorCode::kProtocol, "kiosk event payload must be an object");
    e.payload = *p;
  }
  return e;
}

KioskEvent to_ui(std::string name, json payload) { return {Direction::kToUi, std::move(name), std::move(payload)}; }
KioskEvent from_ui(std::string name, json payload) {
  return {Direction::kFromUi, std::move(name), std::move(payload)};
}

namespace {

enum Screen {
  kMenu,
  kEmployeeRequested,
  kCapturing,
  kKeypad,
  kCodeSent,
  kWelcome,
  kDenied,
  kGuestRequested,
  kSpeaking,
  kRecorded,
  kConfirming,
  kAnswered,
  kDeliveryRequested,
  kNotified,
  kErrorShown,
};

const std::map<std::pair<int, std::string_view>, int> kUiEdges = {
    {{kMenu, "pressEmployee"}, kEmployeeRequested},
    {{kMenu, "pressGuest"}, kGuestRequested},
    {{kMenu, "pressDelivery"}, kDeliveryRequested},
    {{kEmployeeRequested, "promptCapture"}, kCapturing},
    {{kCapturing, "promptCode"}, kKeypad},
    {{kCapturing, "showDenied"}, kDenied},
    {{kKeypad, "keypadSubmit"}, kCodeSent},
    {{kCodeSent, "promptCode"}, kKeypad},
    {{kCodeSent, "showWelcome"}, kWelcome},
    {{kCodeSent, "showMainMenu"}, kMenu},
    {{kGuestRequested, "promptSpeak"}, kSpeaking},
    {{kSpeaking, "recordDone"}, kRecorded},
    {{kRecorded, "showNotified"}, kNotified},
    {{kRecorded, "askConfirm"}, kConfirming},
    {{kRecorded, "showRetry"}, kSpeaking},
    {{kConfirming, "confirmYes"}, kAnswered},
    {{kConfirming, "confirmNo"}, kAnswered},
    {{kAnswered, "showNotified"}, kNotified},
    {{kAnswered, "promptSpeak"}, kSpeaking},
    {{kDeliveryRequested, "showNotified"}, kNotified},
    {{kWelcome, "showMainMenu"}, kMenu},
    {{kDenied, "showMainMenu"}, kMenu},
    {{kNotified, "showMainMenu"}, kMenu},
    {{kErrorShown, "showMainMenu"}, kMenu},
    {{kMenu, "showMainMenu"}, kMenu},
};

bool is_press(std::string_view name) {
  return name == "pressEmployee" || name == "pressGuest" || name == "pressDelivery";
}

}  // namespace

bool is_valid_ui_trace(const std::vector<KioskEvent>& trace) {
  int screen = kMenu;
  for (const auto& e : trace) {
    const bool known = e.direction == Direction::kToUi ? is_to_ui_name(e.name) : is_from_ui_name(e.name);
    if (!known) return false;
    if (e.name == "showError") {
      screen = kErrorShown;
      continue;
    }
    auto it = kUiEdges.find({screen, e.name});
    if (it != kUiEdges.end()) {
      screen = it->second;
    } else if (!(is_press(e.name) && screen != kMenu)) {
      return false;
    }
  }
  return true;
}

bool captures_have_consent(const std::vector<DoorLogEntry>& log) {
  int camera_triggers = 0;
  int mic_triggers = 0;
  for (const auto& entry : log) {
    if (entry.kind == DoorLogEntry::Kind::kKiosk) {
      if (entry.event.direction != Direction::kFromUi) continue;
      // A press queued behind a running session is counted when replayed.
      if (entry.event.payload.contains("queuedBehind")) continue;
      if (entry.event.name == "pressEmployee") ++camera_triggers;
      if (entry.event.name == "recordDone") ++mic_triggers;
      continue;
    }
    int& budget = entry.device == DeviceKind::kCamera ? camera_triggers : mic_triggers;
    if (budget == 0) return false;
    --budget;
  }
  return true;
}

// ---------------------------------------------------------------------------

DoorUnit::DoorUnit(CaptureDevice& camera, CaptureDevice& microphone, CipherKey key, DoorUnitConfig config)
    : camera_(camera), microphone_(microphone), key_(std::move(key)), config_(config) {}

void DoorUnit::set_controller_link(SendFn send) {
  std::lock_guard lock(mutex_);
  send_ = std::move(send);
}

void DoorUnit::set_ui(EmitFn emit) {
  std::lock_guard lock(mutex_);
  emit_ = std::move(emit);
}

std::optional<std::string> DoorUnit::session() const {
  std::lock_guard lock(mutex_);
  return session_;
}

std::vector<DoorLogEntry> DoorUnit::log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<KioskEvent> DoorUnit::ui_trace() const {
  std::lock_guard lock(mutex_);
  std::vector<KioskEvent> out;
  for (const auto& e : log_) {
    if (e.kind == DoorLogEntry::Kind::kKiosk) out.push_back(e.event);
  }
  return out;
}

void DoorUnit::emit(KioskEvent event) {
  log_.push_back({DoorLogEntry::Kind::kKiosk, event, {}});
  if (emit_) emit_(event);
}

void DoorUnit::send(const Message& message) {
  if (!send_ || !controller_up_) throw Error(ErrorCode::kIo, "controller is not connected");
  send_(message);
}

Bytes DoorUnit::capture(CaptureDevice& device) {
  Bytes data = device.capture();
  log_.push_back({DoorLogEntry::Kind::kCapture, {}, device.kind()});
  return data;
}

void DoorUnit::on_ui_connected() {
  std::lock_guard lock(mutex_);
  emit(controller_up_ ? to_ui("showMainMenu") : to_ui("showError", {{"message", "out of service"}, {"outOfService", true}}));
}

void DoorUnit::on_ui_disconnected() {
  std::lock_guard lock(mutex_);
  queued_.clear();
  if (session_ || requested_kind_) abort("kiosk disconnected");
}

void DoorUnit::on_controller_connected() {
  std::lock_guard lock(mutex_);
  controller_up_ = true;
  emit(to_ui("showMainMenu"));
}

void DoorUnit::on_controller_lost() {
  std::lock_guard lock(mutex_);
  controller_up_ = false;
  session_.reset();
  requested_kind_.reset();
  queued_.clear();
  emit(to_ui("showError", {{"message", "out of service"}, {"outOfService", true}}));
}

void DoorUnit::on_ui_event(const KioskEvent& event) {
  std::lock_guard lock(mutex_);
  if (event.direction != Direction::kFromUi || !is_from_ui_name(event.name)) {
    logger()->warn("ignoring kiosk event '{}'", event.name);
    return;
  }
  const bool busy = session_ || requested_kind_;
  if (is_press(event.name) && busy) {
    KioskEvent held = event;
    held.payload["queuedBehind"] = session_.value_or("pending");
    log_.push_back({DoorLogEntry::Kind::kKiosk, held, {}});
    if (queued_.size() < config_.max_queued_presses) queued_.push_back(event);
    return;
  }
  log_.push_back({DoorLogEntry::Kind::kKiosk, event, {}});
  handle_ui(event);
}

void DoorUnit::handle_ui(const KioskEvent& event) {
  const std::string& name = event.name;
  if (is_press(name)) {
    if (!controller_up_) {
      emit(to_ui("showError", {{"message", "out of service"}, {"outOfService", true}}));
      return;
    }
    start_session(name == "pressEmployee" ? "employee" : name == "pressGuest" ? "guest" : "delivery");
    return;
  }
  if (!session_) {
    logger()->warn("kiosk event '{}' outside a session", name);
    return;
  }
  try {
    if (name == "keypadSubmit" && session_kind_ == "employee") {
      const json& code = event.payload.contains("code") ? event.payload["code"] : json("");
      send(make_message(MessageType::kCodeSubmit, Role::kDoorUnit, session_,
                        {{"code", code.is_string() ? code.get<std::string>() : code.dump()}}));
    } else if (name == "recordDone" && session_kind_ == "guest") {
      record_and_upload();
    } else if ((name == "confirmYes" || name == "confirmNo") && session_kind_ == "guest") {
      send(make_message(MessageType::kGuestConfirm, Role::kDoorUnit, session_,
                        {{"answer", name == "confirmYes" ? "yes" : "no"}}));
    } else {
      logger()->warn("kiosk event '{}' does not fit a {} session", name, session_kind_);
    }
  } catch (const Error& e) {
    emit(to_ui("showError", {{"message", e.what()}}));
    abort(e.what());
  }
}

void DoorUnit::start_session(const std::string& kind) {
  requested_kind_ = kind;
  try {
    send(make_message(MessageType::kSessionStart, Role::kDoorUnit, std::nullopt, {{"kind", kind}}));
  } catch (const Error& e) {
    requested_kind_.reset();
    emit(to_ui("showError", {{"message", e.what()}}));
    finish();
  }
}

void DoorUnit::upload_capture() {
  Bytes image = capture(camera_);
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "camera returned an empty image");
  Bytes encrypted = xor_transform(image, key_);
  wipe(image);
  std::string encoded = base64_encode(encrypted);
  wipe(encrypted);
  Message upload = make_message(MessageType::kCaptureUpload, Role::kDoorUnit, session_, {{"image", encoded}});
  wipe(encoded);
  send(upload);
}

void DoorUnit::record_and_upload() {
  Bytes audio = capture(microphone_);
  if (audio.empty()) throw Error(ErrorCode::kInvalidArgument, "microphone returned an empty recording");
  std::string encoded = base64_encode(audio);
  wipe(audio);
  Message upload = make_message(MessageType::kGuestAudio, Role::kDoorUnit, session_, {{"audio", encoded}});
  wipe(encoded);
  send(upload);
}

void DoorUnit::abort(const std::string& why) {
  if (session_) {
    try {
      send(make_message(MessageType::kError, Role::kDoorUnit, session_, {{"message", why}}));
    } catch (const Error&) {
    }
  }
  finish();
}

void DoorUnit::finish() {
  session_.reset();
  requested_kind_.reset();
  session_kind_.clear();
  emit(to_ui("showMainMenu"));
  if (queued_.empty()) return;
  KioskEvent next = queued_.front();
  queued_.pop_front();
  next.payload["queued"] = true;
  log_.push_back({DoorLogEntry::Kind::kKiosk, next, {}});
  handle_ui(next);
}

void DoorUnit::on_controller_message(const Message& m) {
  std::lock_guard lock(mutex_);
  if (m.type == MessageType::kSessionStart) {
    const std::string kind = m.payload.value("kind", "");
    if (!requested_kind_ || kind != *requested_kind_ || !m.session) {
      logger()->warn("unexpected session acknowledgement");
      return;
    }
    requested_kind_.reset();
    session_ = m.session;
    session_kind_ = kind;
    try {
      if (kind == "employee") {
        emit(to_ui("promptCapture"));
        upload_capture();
      } else if (kind == "guest") {
        emit(to_ui("promptSpeak"));
      } else {
        send(make_message(MessageType::kDelivery, Role::kDoorUnit, session_));
      }
    } catch (const Error& e) {
      emit(to_ui("showError", {{"message", e.what()}}));
      abort(e.what());
    }
    return;
  }

  if (m.type == MessageType::kError) {
    const bool ours = (m.session && m.session == session_) || (!m.session && requested_kind_);
    if (!ours) {
      logger()->warn("controller error: {}", m.payload.value("message", ""));
      return;
    }
    emit(to_ui("showError", {{"message", m.payload.value("message", "controller error")}}));
    finish();
    return;
  }

  if (!session_ || m.session != session_) return;  // stale reply for a finished session

  switch (m.type) {
    case MessageType::kCodeChallenge:
      emit(to_ui("promptCode", {{"attemptsRemaining", m.payload["attemptsRemaining"]}}));
      break;
    case MessageType::kAuthResult:
      emit(to_ui("showDenied"));
      finish();
      break;
    case MessageType::kCodeResult:
      if (m.payload["ok"].get<bool>()) {
        emit(to_ui("showWelcome", {{"employeeName", m.payload.value("employeeName", "")},
                                   {"message", m.payload.value("welcome", "")}}));
        finish();
      } else if (m.payload.value("lockedOut", false)) {
        finish();
      } else if (m.payload.value("expired", false)) {
        emit(to_ui("showError", {{"message", "the code has expired"}}));
        finish();
      }
      // otherwise a fresh CODE_CHALLENGE follows
      break;
    case MessageType::kGuestMatch:
      if (m.payload["band"] == "confirm") {
        emit(to_ui("askConfirm", {{"candidateName", m.payload.value("candidateName", "")},
                                  {"score", m.payload["score"]}}));
      } else {
        emit(to_ui("showRetry"));
      }
      break;
    case MessageType::kGuestResult:
      if (m.payload["notified"].get<bool>()) {
        emit(to_ui("showNotified", {{"employeeName", m.payload.value("employeeName", "")}}));
        finish();
      } else {
        emit(to_ui("promptSpeak"));
      }
      break;
    case MessageType::kDelivery:
      emit(to_ui("showNotified"));
      finish();
      break;
    default:
      break;
  }
}

}  // namespace gatekeeper::door
