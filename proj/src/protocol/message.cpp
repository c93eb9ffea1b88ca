#include <algorithm>
#include <set>

#include "gatekeeper/error.hpp"
#include "gatekeeper/protocol.hpp"

namespace gatekeeper::protocol {

using nlohmann::json;

namespace {

struct TypeName {
  MessageType type;
  std::string_view name;
};

constexpr TypeName kTypeNames[] = {
    {MessageType::kHello, "HELLO"},
    {MessageType::kSessionStart, "SESSION_START"},
    {MessageType::kCaptureUpload, "CAPTURE_UPLOAD"},
    {MessageType::kAuthResult, "AUTH_RESULT"},
    {MessageType::kCodeChallenge, "CODE_CHALLENGE"},
    {MessageType::kCodeSubmit, "CODE_SUBMIT"},
    {MessageType::kCodeResult, "CODE_RESULT"},
    {MessageType::kUnlockEvent, "UNLOCK_EVENT"},
    {MessageType::kGuestAudio, "GUEST_AUDIO"},
    {MessageType::kGuestMatch, "GUEST_MATCH"},
    {MessageType::kGuestConfirm, "GUEST_CONFIRM"},
    {MessageType::kGuestResult, "GUEST_RESULT"},
    {MessageType::kDelivery, "DELIVERY"},
    {MessageType::kNotify, "NOTIFY"},
    {MessageType::kNotifyAck, "NOTIFY_ACK"},
    {MessageType::kError, "ERROR"},
    {MessageType::kPing, "PING"},
    {MessageType::kPong, "PONG"},
};

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::kProtocol, why); }

const json& field(const json& payload, const char* key, json::value_t kind, std::string_view type) {
  auto it = payload.find(key);
  const bool ok = it != payload.end() &&
                  (it->type() == kind ||
                   (kind == json::value_t::number_integer && it->is_number_integer()) ||
                   (kind == json::value_t::number_float && it->is_number()));
  if (!ok) reject(std::string(type) + " payload needs field '" + key + "'");
  return *it;
}

void require_string(const json& p, const char* key, std::string_view type) {
  field(p, key, json::value_t::string, type);
}
void require_bool(const json& p, const char* key, std::string_view type) {
  field(p, key, json::value_t::boolean, type);
}
void require_int(const json& p, const char* key, std::string_view type) {
  field(p, key, json::value_t::number_integer, type);
}
void require_one_of(const json& p, const char* key, std::initializer_list<std::string_view> allowed,
                    std::string_view type) {
  const auto& v = field(p, key, json::value_t::string, type);
  const auto& s = v.get_ref<const std::string&>();
  if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
    reject(std::string(type) + " field '" + key + "' has unsupported value '" + s + "'");
  }
}

bool needs_session(MessageType type) {
  switch (type) {
    case MessageType::kCaptureUpload:
    case MessageType::kAuthResult:
    case MessageType::kCodeChallenge:
    case MessageType::kCodeSubmit:
    case MessageType::kCodeResult:
    case MessageType::kUnlockEvent:
    case MessageType::kGuestAudio:
    case MessageType::kGuestMatch:
    case MessageType::kGuestConfirm:
    case MessageType::kGuestResult:
    case MessageType::kDelivery:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view to_string(MessageType type) {
  for (const auto& t : kTypeNames) {
    if (t.type == type) return t.name;
  }
  return "ERROR";
}

std::optional<MessageType> parse_message_type(std::string_view text) {
  for (const auto& t : kTypeNames) {
    if (t.name == text) return t.type;
  }
  return std::nullopt;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kDoorUnit: return "door";
    case Role::kController: return "controller";
    case Role::kNotifier: return "notifier";
  }
  return "controller";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "door") return Role::kDoorUnit;
  if (text == "controller") return Role::kController;
  if (text == "notifier") return Role::kNotifier;
  return std::nullopt;
}

bool may_send(Role role, MessageType type) {
  switch (type) {
    case MessageType::kHello:
    case MessageType::kError:
    case MessageType::kPing:
    case MessageType::kPong:
      return true;
    case MessageType::kSessionStart:
    case MessageType::kDelivery:
      return role == Role::kDoorUnit || role == Role::kController;
    case MessageType::kCaptureUpload:
    case MessageType::kCodeSubmit:
    case MessageType::kGuestAudio:
    case MessageType::kGuestConfirm:
      return role == Role::kDoorUnit;
    case MessageType::kAuthResult:
    case MessageType::kCodeChallenge:
    case MessageType::kCodeResult:
    case MessageType::kUnlockEvent:
    case MessageType::kGuestMatch:
    case MessageType::kGuestResult:
    case MessageType::kNotify:
      return role == Role::kController;
    case MessageType::kNotifyAck:
      return role == Role::kNotifier;
  }
  return false;
}

Message make_message(MessageType type, Role role, std::optional<std::string> session, json payload) {
  return Message{kVersion, type, role, std::move(session), std::move(payload)};
}

json to_json(const Message& m) {
  return json{{"v", m.v},
              {"type", to_string(m.type)},
              {"role", to_string(m.role)},
              {"session", m.session ? json(*m.session) : json(nullptr)},
              {"payload", m.payload}};
}

void validate(const Message& m) {
  const std::string_view type = to_string(m.type);
  if (m.v != kVersion) reject("unsupported protocol version " + std::to_string(m.v));
  if (!may_send(m.role, m.type)) {
    reject(std::string(to_string(m.role)) + " may not send " + std::string(type));
  }
  if (!m.payload.is_object()) reject(std::string(type) + " payload must be an object");
  if (needs_session(m.type) && (!m.session || m.session->empty())) {
    reject(std::string(type) + " requires a session id");
  }
  const json& p = m.payload;
  switch (m.type) {
    case MessageType::kSessionStart:
      require_one_of(p, "kind", {"employee", "guest", "delivery"}, type);
      break;
    case MessageType::kCaptureUpload:
      require_string(p, "image", type);
      break;
    case MessageType::kAuthResult:
      require_bool(p, "accepted", type);
      break;
    case MessageType::kCodeChallenge:
      require_string(p, "challengeId", type);
      require_int(p, "attemptsRemaining", type);
      break;
    case MessageType::kCodeSubmit:
      require_string(p, "code", type);
      break;
    case MessageType::kCodeResult:
      require_bool(p, "ok", type);
      break;
    case MessageType::kUnlockEvent:
      require_int(p, "windowStart", type);
      require_int(p, "windowEnd", type);
      break;
    case MessageType::kGuestAudio:
      require_string(p, "audio", type);
      break;
    case MessageType::kGuestMatch:
      require_one_of(p, "band", {"notify", "confirm", "retry"}, type);
      require_int(p, "score", type);
      break;
    case MessageType::kGuestConfirm:
      require_one_of(p, "answer", {"yes", "no"}, type);
      break;
    case MessageType::kGuestResult:
      require_bool(p, "notified", type);
      break;
    case MessageType::kNotify:
      require_string(p, "id", type);
      require_one_of(p, "targetKind", {"direct", "channel"}, type);
      require_string(p, "target", type);
      require_string(p, "text", type);
      if (p["text"].get_ref<const std::string&>().empty()) reject("NOTIFY text must not be empty");
      break;
    case MessageType::kNotifyAck:
      require_string(p, "id", type);
      require_bool(p, "ok", type);
      break;
    case MessageType::kError:
      require_string(p, "message", type);
      break;
    case MessageType::kHello:
    case MessageType::kDelivery:
    case MessageType::kPing:
    case MessageType::kPong:
      break;
  }
}

Message message_from_json(const json& doc) {
  if (!doc.is_object()) reject("message must be a JSON object");
  const auto v = doc.find("v");
  if (v == doc.end() || !v->is_number_integer()) reject("message needs an integer 'v'");
  const auto t = doc.find("type");
  if (t == doc.end() || !t->is_string()) reject("message needs a string 'type'");
  const auto type = parse_message_type(t->get_ref<const std::string&>());
  if (!type) reject("unknown message type '" + t->get<std::string>() + "'");
  const auto r = doc.find("role");
  if (r == doc.end() || !r->is_string()) reject("message needs a string 'role'");
  const auto role = parse_role(r->get_ref<const std::string&>());
  if (!role) reject("unknown role '" + r->get<std::string>() + "'");

  Message m;
  m.v = v->get<int>();
  m.type = *type;
  m.role = *role;
  if (auto s = doc.find("session"); s != doc.end() && !s->is_null()) {
    if (!s->is_string()) reject("'session' must be a string or null");
    m.session = s->get<std::string>();
  }
  if (auto p = doc.find("payload"); p != doc.end()) {
    m.payload = *p;
  }
  validate(m);
  return m;
}

// ---------------------------------------------------------------------------
// Session trace validation: a tiny NFA per session kind.

namespace {

constexpr int kEnd = 99;

struct Edge {
  int from;
  MessageType type;
  Role role;
  int to;
};

using MT = MessageType;
constexpr Role D = Role::kDoorUnit;
constexpr Role C = Role::kController;

const std::vector<Edge> kEmployeeEdges = {
    {0, MT::kSessionStart, D, 1}, {1, MT::kSessionStart, C, 2}, {2, MT::kCaptureUpload, D, 3},
    {3, MT::kAuthResult, C, kEnd}, {3, MT::kCodeChallenge, C, 4}, {4, MT::kCodeSubmit, D, 5},
    {5, MT::kCodeResult, C, 6},   {6, MT::kUnlockEvent, C, kEnd}, {5, MT::kCodeResult, C, 7},
    {7, MT::kCodeChallenge, C, 4},
};
const std::set<int> kEmployeeAccept = {kEnd, 7};

const std::vector<Edge> kGuestEdges = {
    {0, MT::kSessionStart, D, 1}, {1, MT::kSessionStart, C, 2}, {2, MT::kGuestAudio, D, 3},
    {3, MT::kGuestResult, C, kEnd}, {3, MT::kGuestMatch, C, 2}, {3, MT::kGuestMatch, C, 4},
    {4, MT::kGuestConfirm, D, 5}, {5, MT::kGuestResult, C, kEnd}, {5, MT::kGuestResult, C, 2},
};
const std::set<int> kGuestAccept = {kEnd};

const std::vector<Edge> kDeliveryEdges = {
    {0, MT::kSessionStart, D, 1},
    {1, MT::kSessionStart, C, 2},
    {2, MT::kDelivery, D, 3},
    {3, MT::kDelivery, C, kEnd},
};
const std::set<int> kDeliveryAccept = {kEnd};

std::set<int> run(std::string_view kind, const std::vector<TraceItem>& trace, const std::set<int>** accept) {
  const std::vector<Edge>* edges = nullptr;
  if (kind == "employee") {
    edges = &kEmployeeEdges;
    *accept = &kEmployeeAccept;
  } else if (kind == "guest") {
    edges = &kGuestEdges;
    *accept = &kGuestAccept;
  } else if (kind == "delivery") {
    edges = &kDeliveryEdges;
    *accept = &kDeliveryAccept;
  } else {
    return {};
  }
  std::set<int> states = {0};
  for (const auto& [type, role] : trace) {
    if (type == MT::kHello || type == MT::kPing || type == MT::kPong) continue;
    std::set<int> next;
    for (int s : states) {
      if (s == kEnd) continue;
      // Either side may end a session with ERROR after it has been requested.
      if (type == MT::kError && s >= 1) next.insert(kEnd);
      for (const auto& e : *edges) {
        if (e.from == s && e.type == type && e.role == role) next.insert(e.to);
      }
    }
    states = std::move(next);
    if (states.empty()) break;
  }
  return states;
}

}  // namespace

bool is_valid_session_trace(std::string_view kind, const std::vector<TraceItem>& trace) {
  const std::set<int>* accept = nullptr;
  const auto states = run(kind, trace, &accept);
  return std::any_of(states.begin(), states.end(), [&](int s) { return accept->count(s) > 0; });
}

bool is_valid_trace_prefix(std::string_view kind, const std::vector<TraceItem>& trace) {
  const std::set<int>* accept = nullptr;
  return !run(kind, trace, &accept).empty();
}

}  // namespace gatekeeper::protocol
