#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gatekeeper/bytes.hpp"

namespace gatekeeper::protocol {

// Wire format: a 4-byte big-endian payload length followed by that many
// bytes of UTF-8 JSON:
//
//   {"v":1,"type":"CODE_SUBMIT","role":"door","session":"s000001","payload":{...}}
//
// Keys are emitted sorted, so one message always encodes to the same bytes.
inline constexpr int kVersion = 1;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxPayload = 16u * 1024u * 1024u;

enum class MessageType {
  kHello,
  kSessionStart,
  kCaptureUpload,
  kAuthResult,
  kCodeChallenge,
  kCodeSubmit,
  kCodeResult,
  kUnlockEvent,
  kGuestAudio,
  kGuestMatch,
  kGuestConfirm,
  kGuestResult,
  kDelivery,
  kNotify,
  kNotifyAck,
  kError,
  kPing,
  kPong,
};

inline constexpr MessageType kAllMessageTypes[] = {
    MessageType::kHello,        MessageType::kSessionStart, MessageType::kCaptureUpload,
    MessageType::kAuthResult,   MessageType::kCodeChallenge, MessageType::kCodeSubmit,
    MessageType::kCodeResult,   MessageType::kUnlockEvent,  MessageType::kGuestAudio,
    MessageType::kGuestMatch,   MessageType::kGuestConfirm, MessageType::kGuestResult,
    MessageType::kDelivery,     MessageType::kNotify,       MessageType::kNotifyAck,
    MessageType::kError,        MessageType::kPing,         MessageType::kPong,
};

// The door unit outside, the controller inside (the only party that may
// unlock), and the notification bot.
enum class Role { kDoorUnit, kController, kNotifier };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);
std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

bool may_send(Role role, MessageType type);

struct Message {
  int v = kVersion;
  MessageType type = MessageType::kHello;
  Role role = Role::kController;
  std::optional<std::string> session;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Message& other) const {
    return v == other.v && type == other.type && role == other.role && session == other.session &&
           payload == other.payload;
  }
};

Message make_message(MessageType type, Role role, std::optional<std::string> session = std::nullopt,
                     nlohmann::json payload = nlohmann::json::object());

nlohmann::json to_json(const Message& message);
// Checks the envelope, the sender's authority for the type, and the
// type-specific payload fields. Throws Error(kProtocol) on any violation.
Message message_from_json(const nlohmann::json& doc);
void validate(const Message& message);

// Frames an arbitrary payload. Throws Error(kProtocol) above kMaxPayload.
Bytes frame_bytes(std::string_view payload);
// Throws Error(kProtocol) when the message is invalid or too large.
Bytes encode_frame(const Message& message);

enum class DecodeStatus {
  kMessage,   // one valid message consumed
  kNeedMore,  // incomplete header or payload, nothing consumed
  kInvalid,   // one frame consumed but its payload is not a valid message
  kFatal,     // declared length over the limit; the stream cannot resync
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kNeedMore;
  std::optional<Message> message;
  std::size_t consumed = 0;
  std::string error;
};

// Never throws; remaining bytes are input.subspan(result.consumed).
DecodeResult decode_frame(ByteView input);

// Direction-tagged message types seen on one session, for trace checks.
using TraceItem = std::pair<MessageType, Role>;

// True when `trace` is a complete path through the kind's flowchart
// ("employee", "guest", "delivery"). HELLO, PING and PONG are ignored.
bool is_valid_session_trace(std::string_view kind, const std::vector<TraceItem>& trace);
// True when `trace` can still be extended into a valid path.
bool is_valid_trace_prefix(std::string_view kind, const std::vector<TraceItem>& trace);

}  // namespace gatekeeper::protocol
