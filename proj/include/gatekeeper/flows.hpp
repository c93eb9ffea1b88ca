#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/clock.hpp"
#include "gatekeeper/crypto.hpp"
#include "gatekeeper/directory.hpp"
#include "gatekeeper/lock.hpp"
#include "gatekeeper/notify.hpp"
#include "gatekeeper/recognition.hpp"
#include "gatekeeper/transcription.hpp"

namespace gatekeeper {

enum class SessionKind { kEmployee, kGuest, kDelivery };

enum class SessionState {
  // employee
  kAwaitingCapture,
  kAwaitingCode,
  kUnlocked,
  kDenied,
  kLockedOut,
  kExpired,
  // guest
  kAwaitingUtterance,
  kAwaitingConfirmation,
  kGuestNotified,
  // delivery
  kNotifyPending,
  kDeliveryNotified,
  // any kind
  kError,
};

enum class Phase { kCapture, kCloudAuth, kPinEntry };

std::string_view to_string(SessionKind kind);
std::string_view to_string(SessionState state);
std::string_view to_string(Phase phase);
SessionKind parse_session_kind(std::string_view text);
// Accepts "Capture", "CloudAuth", "PinEntry" (any case); throws
// Error(kInvalidArgument) for anything else.
Phase parse_phase(std::string_view label);

bool is_terminal(SessionState state);

struct PinChallenge {
  std::string code;  // exactly four decimal digits
  std::string challenge_id;
  TimeMs issued_at = 0;
};

// Uniform over "0000".."9999".
PinChallenge generate_code(std::mt19937_64& rng, std::string challenge_id = {}, TimeMs issued_at = 0);
bool is_pin_format(std::string_view entry);

struct PhaseTiming {
  Phase phase = Phase::kCapture;
  TimeMs duration_ms = 0;
};

struct AccessSession {
  std::string session_id;
  SessionKind kind = SessionKind::kEmployee;
  SessionState state = SessionState::kAwaitingCapture;
  int attempts_used = 0;
  std::optional<PinChallenge> active_challenge;
  std::vector<PhaseTiming> phase_timings;
  TimeMs created_at = 0;

  // Matched employee (employee flow), candidate or notified employee (guest).
  std::optional<std::string> employee_id;
  std::optional<double> similarity;
  std::optional<int> name_score;
  std::vector<std::string> issued_challenge_ids;
  int utterances = 0;
  TimeMs pin_phase_started_at = 0;
  std::string error;

  bool terminal() const { return is_terminal(state); }
  // Serializable view. PIN codes are redacted; no media is ever held.
  nlohmann::json dump() const;
};

// Throws Error(kInvalidArgument) for unknown labels or negative durations.
AccessSession record_phase(AccessSession session, std::string_view phase, TimeMs duration_ms);

struct PhaseStat {
  Phase phase;
  double mean_ms = 0.0;
  double share_pct = 0.0;
};

struct TimingReport {
  std::vector<PhaseStat> phases;  // Capture, CloudAuth, PinEntry
  double total_mean_ms = 0.0;
  std::size_t session_count = 0;
  // Set when the mean total is zero and shares are undefined.
  bool degenerate = true;
};

// Sessions without any phase timing are ignored. Phases recorded more than
// once in one session are summed for that session.
TimingReport timing_report(const std::vector<AccessSession>& sessions);

enum class OutcomeKind {
  kChallengeIssued,
  kDenied,
  kUnlocked,
  kNewChallenge,
  kLockedOut,
  kExpired,
  kGuestNotified,
  kConfirmRequested,
  kRetryPrompt,
  kBackToUtterance,
  kDeliveryNotified,
  kError,
};

std::string_view to_string(OutcomeKind kind);

struct StepOutcome {
  OutcomeKind kind = OutcomeKind::kError;
  SessionState state = SessionState::kError;
  std::string employee_id;
  std::string employee_name;
  int score = 0;
  int attempts_remaining = 0;
  std::string challenge_id;
  std::string message;
  std::optional<UnlockWindow> unlock;
};

struct FlowConfig {
  RecognitionConfig recognition;
  TranscriptionConfig transcription;
  TimeMs unlock_window_ms = 5000;
  int max_attempts = 3;
  TimeMs challenge_expiry_ms = 120'000;
  std::string delivery_channel = "#deliveries";

  void validate() const;
};

std::string welcome_text(std::string_view full_name);
inline constexpr std::string_view kGuestWaitingText = "A guest is waiting outside the entrance door";
inline constexpr std::string_view kDeliveryText = "There is a delivery at the door";
std::string pin_message_text(std::string_view code);

// Collaborators of the controller. References must outlive it.
struct FlowDeps {
  const Directory& directory;
  const FaceProvider& face;
  const SpeechProvider& speech;
  NotificationSink& notifier;
  LockActuator& lock;
  const Clock& clock;
  CipherKey key;
  TemplateStore* templates = nullptr;
  // Where finished-session summaries are appended (sessions.jsonl).
  std::optional<std::filesystem::path> state_root;
  const NameSimilarity* metric = nullptr;  // LevenshteinRatio when null
};

// The indoor node's authority over the door: one session at a time, every
// transition serialized, every error ending with the door locked.
//
// Precondition violations (wrong session, wrong kind or state) throw
// Error(kPrecondition) and leave the session untouched.
class AccessController {
 public:
  AccessController(FlowDeps deps, FlowConfig config, std::uint64_t seed);

  // Throws Error(kBusy) while another session is active.
  AccessSession start_session(SessionKind kind);

  StepOutcome handle_capture(const std::string& session_id, ByteView encrypted_probe);
  StepOutcome submit_code(const std::string& session_id, std::string_view entered);
  StepOutcome handle_utterance(const std::string& session_id, ByteView audio);
  StepOutcome confirm_guest(const std::string& session_id, bool yes);
  StepOutcome handle_delivery(const std::string& session_id);
  // Ends a live session as Error (client gone, UI dropped). No-op result
  // for sessions that already ended.
  StepOutcome abort_session(const std::string& session_id, const std::string& reason);

  void record_phase(const std::string& session_id, std::string_view phase, TimeMs duration_ms);

  std::optional<AccessSession> active_session() const;
  std::optional<AccessSession> session(const std::string& session_id) const;
  std::vector<AccessSession> history() const;
  TimingReport timing_report() const;

  const FlowConfig& config() const { return config_; }
  const Directory& directory() const { return deps_.directory; }

 private:
  AccessSession& live_session(const std::string& session_id);
  StepOutcome finish(AccessSession& s, SessionState state, OutcomeKind kind, std::string message = {});
  StepOutcome fail(AccessSession& s, const std::string& message);
  // Issues and dispatches a fresh challenge; false if dispatch failed.
  bool issue_challenge(AccessSession& s, const EmployeeRecord& employee);
  StepOutcome notify_guest_target(AccessSession& s, const EmployeeRecord& employee);
  void archive(const AccessSession& s);

  FlowDeps deps_;
  FlowConfig config_;
  LevenshteinRatio default_metric_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::uint64_t next_session_ = 1;
  std::map<std::string, AccessSession> sessions_;
  std::optional<std::string> active_id_;
  std::vector<std::string> finished_order_;
};

}  // namespace gatekeeper
