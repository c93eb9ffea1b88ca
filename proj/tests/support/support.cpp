#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>

#include "gatekeeper/error.hpp"

namespace testing_support {

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    path_ = std::filesystem::temp_directory_path() / ("gk-test-" + std::to_string(rng() % 1'000'000'000));
    if (std::filesystem::create_directory(path_)) return;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::string> scan_tree(const std::filesystem::path& root, const std::vector<Bytes>& needles) {
  std::vector<std::string> hits;
  if (!std::filesystem::exists(root)) return hits;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (std::size_t i = 0; i < needles.size(); ++i) {
      const auto& n = needles[i];
      if (std::search(content.begin(), content.end(), n.begin(), n.end()) != content.end()) {
        hits.push_back(entry.path().string() + ": needle#" + std::to_string(i));
      }
    }
  }
  return hits;
}

std::vector<Bytes> leak_forms(const Bytes& media, const CipherKey* key) {
  std::vector<Bytes> forms;
  if (media.size() < 12) return forms;
  forms.push_back(media);
  forms.push_back(to_bytes(base64_encode(media)));
  if (key) {
    const Bytes enc = xor_transform(media, *key);
    forms.push_back(enc);
    forms.push_back(to_bytes(base64_encode(enc)));
  }
  return forms;
}

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const char* const kPieces[] = {"a", "Z", "0", " ", "\"", "\\", "\n", "{", "å", "ö", "€", "😀", "\x01"};
  std::string out;
  const std::size_t n = rng() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) out += kPieces[rng() % std::size(kPieces)];
  return out;
}

nlohmann::json random_value(std::mt19937_64& rng, int depth) {
  switch (rng() % (depth > 0 ? 6 : 4)) {
    case 0: return static_cast<std::int64_t>(rng()) >> (rng() % 64);
    case 1: return random_text(rng, 12);
    case 2: return rng() % 2 == 0;
    case 3: return nullptr;
    case 4: {
      nlohmann::json a = nlohmann::json::array();
      for (std::size_t i = rng() % 4; i > 0; --i) a.push_back(random_value(rng, depth - 1));
      return a;
    }
    default: {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = rng() % 4; i > 0; --i) o["k" + random_text(rng, 4)] = random_value(rng, depth - 1);
      return o;
    }
  }
}

}  // namespace

protocol::Message random_message(std::mt19937_64& rng) {
  using protocol::MessageType;
  using protocol::Role;
  for (;;) {
    const MessageType type = protocol::kAllMessageTypes[rng() % std::size(protocol::kAllMessageTypes)];
    const Role role = static_cast<Role>(rng() % 3);
    if (!protocol::may_send(role, type)) continue;
    nlohmann::json p = nlohmann::json::object();
    for (std::size_t i = rng() % 3; i > 0; --i) p["x" + random_text(rng, 5)] = random_value(rng, 2);
    const auto pick = [&](std::initializer_list<const char*> options) {
      return std::string(*(options.begin() + rng() % options.size()));
    };
    const auto integer = [&] { return static_cast<std::int64_t>(rng() % 2'000'000'000); };
    switch (type) {
      case MessageType::kSessionStart: p["kind"] = pick({"employee", "guest", "delivery"}); break;
      case MessageType::kCaptureUpload: p["image"] = base64_encode(to_bytes(random_text(rng, 30))); break;
      case MessageType::kAuthResult: p["accepted"] = rng() % 2 == 0; break;
      case MessageType::kCodeChallenge:
        p["challengeId"] = random_text(rng, 8);
        p["attemptsRemaining"] = static_cast<int>(rng() % 4);
        break;
      case MessageType::kCodeSubmit: p["code"] = random_text(rng, 5); break;
      case MessageType::kCodeResult: p["ok"] = rng() % 2 == 0; break;
      case MessageType::kUnlockEvent:
        p["windowStart"] = integer();
        p["windowEnd"] = integer();
        break;
      case MessageType::kGuestAudio: p["audio"] = base64_encode(to_bytes(random_text(rng, 30))); break;
      case MessageType::kGuestMatch:
        p["band"] = pick({"notify", "confirm", "retry"});
        p["score"] = static_cast<int>(rng() % 101);
        break;
      case MessageType::kGuestConfirm: p["answer"] = pick({"yes", "no"}); break;
      case MessageType::kGuestResult: p["notified"] = rng() % 2 == 0; break;
      case MessageType::kNotify:
        p["id"] = random_text(rng, 6);
        p["targetKind"] = pick({"direct", "channel"});
        p["target"] = random_text(rng, 8);
        p["text"] = "t" + random_text(rng, 20);
        break;
      case MessageType::kNotifyAck:
        p["id"] = random_text(rng, 6);
        p["ok"] = rng() % 2 == 0;
        break;
      case MessageType::kError: p["message"] = random_text(rng, 20); break;
      default: break;
    }
    std::optional<std::string> session;
    if (rng() % 4 != 0) session = "s" + std::to_string(rng() % 1'000'000);
    protocol::Message m = protocol::make_message(type, role, session, p);
    try {
      protocol::validate(m);
    } catch (const Error&) {
      continue;  // e.g. a session-bound type drew no session
    }
    return m;
  }
}

CipherKey test_key() { return CipherKey::from_hex("0f1e2d3c4b5a69788796a5b4c3d2e1f00123456789abcdef"); }

std::vector<EmployeeRecord> sample_people() {
  return {
      {"e1", "Anna Lindberg", "@anna", {}},
      {"e2", "Bo Ek", "@bo", {}},
      {"e3", "Carl Svensson", "@carl", {}},
      {"e4", "Anna Lindberg", "@anna.l", {}},
  };
}

Rig::Rig(Options o)
    : directory(o.people), face(o.faces), speech(o.speech), key(test_key()) {
  if (o.with_templates) templates = std::make_unique<TemplateStore>(directory, DirectoryConfig{}, templates_root.path());
  FlowDeps deps{directory, face, speech, sink, lock, clock, key, templates.get(), state.path(), nullptr};
  flows = std::make_unique<AccessController>(deps, o.config, o.seed);
}

Rig::~Rig() = default;

Bytes Rig::probe_plain(const std::string& tag) {
  if (tag.size() != kTagLength) throw Error(ErrorCode::kInvalidArgument, "test media tags are 8 bytes");
  Bytes out = to_bytes(tag);
  for (int i = 0; i < 96; ++i) {
    filler_ ^= filler_ << 13;
    filler_ ^= filler_ >> 7;
    filler_ ^= filler_ << 17;
    out.push_back(static_cast<std::uint8_t>(filler_));
  }
  media_.push_back(out);
  return out;
}

Bytes Rig::probe(const std::string& tag) { return xor_transform(probe_plain(tag), key); }

Bytes Rig::audio(const std::string& tag) { return probe_plain(tag); }

std::string Rig::last_code(const std::string& handle) const {
  const auto receipts = sink.receipts();
  for (auto it = receipts.rbegin(); it != receipts.rend(); ++it) {
    const auto& n = it->notification;
    if (n.target_kind == TargetKind::kDirect && n.target == handle && n.text.rfind("Your door code is ", 0) == 0) {
      return n.text.substr(n.text.size() - 4);
    }
  }
  throw Error(ErrorCode::kNotFound, "no code was sent to " + handle);
}

std::vector<std::string> Rig::gdpr_violations() const {
  std::vector<Bytes> needles;
  for (const auto& m : media_) {
    for (auto& f : leak_forms(m, &key)) needles.push_back(std::move(f));
  }
  std::vector<std::string> hits = scan_tree(state.path(), needles);
  for (const auto& s : flows->history()) {
    const std::string dump = s.dump().dump();
    for (std::size_t i = 0; i < needles.size(); ++i) {
      const auto& n = needles[i];
      if (std::search(dump.begin(), dump.end(), n.begin(), n.end()) != dump.end()) {
        hits.push_back("dump of " + s.session_id + ": needle#" + std::to_string(i));
      }
    }
  }
  return hits;
}

}  // namespace testing_support
