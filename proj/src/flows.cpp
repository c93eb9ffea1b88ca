#include "gatekeeper/flows.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper {

using nlohmann::json;

namespace {

constexpr std::size_t kHistoryLimit = 10'000;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

}  // namespace

std::string_view to_string(SessionKind kind) {
  switch (kind) {
    case SessionKind::kEmployee: return "employee";
    case SessionKind::kGuest: return "guest";
    case SessionKind::kDelivery: return "delivery";
  }
  return "employee";
}

SessionKind parse_session_kind(std::string_view text) {
  const std::string t = lowercase(text);
  if (t == "employee") return SessionKind::kEmployee;
  if (t == "guest") return SessionKind::kGuest;
  if (t == "delivery") return SessionKind::kDelivery;
  throw Error(ErrorCode::kInvalidArgument, "unknown session kind '" + std::string(text) + "'");
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::kAwaitingCapture: return "awaitingCapture";
    case SessionState::kAwaitingCode: return "awaitingCode";
    case SessionState::kUnlocked: return "unlocked";
    case SessionState::kDenied: return "denied";
    case SessionState::kLockedOut: return "lockedOut";
    case SessionState::kExpired: return "expired";
    case SessionState::kAwaitingUtterance: return "awaitingUtterance";
    case SessionState::kAwaitingConfirmation: return "awaitingConfirmation";
    case SessionState::kGuestNotified: return "guestNotified";
    case SessionState::kNotifyPending: return "notifyPending";
    case SessionState::kDeliveryNotified: return "deliveryNotified";
    case SessionState::kError: return "error";
  }
  return "error";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kCapture: return "Capture";
    case Phase::kCloudAuth: return "CloudAuth";
    case Phase::kPinEntry: return "PinEntry";
  }
  return "Capture";
}

Phase parse_phase(std::string_view label) {
  const std::string l = lowercase(label);
  if (l == "capture") return Phase::kCapture;
  if (l == "cloudauth") return Phase::kCloudAuth;
  if (l == "pinentry") return Phase::kPinEntry;
  throw Error(ErrorCode::kInvalidArgument, "unknown phase label '" + std::string(label) + "'");
}

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kChallengeIssued: return "challengeIssued";
    case OutcomeKind::kDenied: return "denied";
    case OutcomeKind::kUnlocked: return "unlocked";
    case OutcomeKind::kNewChallenge: return "newChallenge";
    case OutcomeKind::kLockedOut: return "lockedOut";
    case OutcomeKind::kExpired: return "expired";
    case OutcomeKind::kGuestNotified: return "guestNotified";
    case OutcomeKind::kConfirmRequested: return "confirmRequested";
    case OutcomeKind::kRetryPrompt: return "retryPrompt";
    case OutcomeKind::kBackToUtterance: return "backToUtterance";
    case OutcomeKind::kDeliveryNotified: return "deliveryNotified";
    case OutcomeKind::kError: return "error";
  }
  return "error";
}

bool is_terminal(SessionState state) {
  switch (state) {
    case SessionState::kUnlocked:
    case SessionState::kDenied:
    case SessionState::kLockedOut:
    case SessionState::kExpired:
    case SessionState::kGuestNotified:
    case SessionState::kDeliveryNotified:
    case SessionState::kError:
      return true;
    default:
      return false;
  }
}

PinChallenge generate_code(std::mt19937_64& rng, std::string challenge_id, TimeMs issued_at) {
  std::uniform_int_distribution<int> digits(0, 9999);
  char code[5];
  std::snprintf(code, sizeof code, "%04d", digits(rng));
  return PinChallenge{code, std::move(challenge_id), issued_at};
}

bool is_pin_format(std::string_view entry) {
  return entry.size() == 4 &&
         std::all_of(entry.begin(), entry.end(), [](char c) { return c >= '0' && c <= '9'; });
}

json AccessSession::dump() const {
  json timings = json::array();
  for (const auto& t : phase_timings) {
    timings.push_back({{"phase", to_string(t.phase)}, {"durationMs", t.duration_ms}});
  }
  json j{{"sessionId", session_id},
         {"kind", to_string(kind)},
         {"state", to_string(state)},
         {"attemptsUsed", attempts_used},
         {"createdAt", created_at},
         {"phaseTimings", timings},
         {"challengeIds", issued_challenge_ids},
         {"utterances", utterances}};
  if (active_challenge) {
    j["activeChallenge"] = {{"challengeId", active_challenge->challenge_id},
                            {"issuedAt", active_challenge->issued_at}};
  }
  if (employee_id) j["employeeId"] = *employee_id;
  if (similarity) j["similarity"] = *similarity;
  if (name_score) j["nameScore"] = *name_score;
  if (!error.empty()) j["error"] = error;
  return j;
}

AccessSession record_phase(AccessSession session, std::string_view phase, TimeMs duration_ms) {
  const Phase p = parse_phase(phase);
  if (duration_ms < 0) throw Error(ErrorCode::kInvalidArgument, "phase duration must be non-negative");
  session.phase_timings.push_back({p, duration_ms});
  return session;
}

TimingReport timing_report(const std::vector<AccessSession>& sessions) {
  constexpr Phase kPhases[] = {Phase::kCapture, Phase::kCloudAuth, Phase::kPinEntry};
  double sums[3] = {0, 0, 0};
  TimingReport report;
  for (const auto& s : sessions) {
    if (s.phase_timings.empty()) continue;
    ++report.session_count;
    for (const auto& t : s.phase_timings) sums[static_cast<int>(t.phase)] += static_cast<double>(t.duration_ms);
  }
  for (int i = 0; i < 3; ++i) {
    const double mean = report.session_count ? sums[i] / static_cast<double>(report.session_count) : 0.0;
    report.phases.push_back({kPhases[i], mean, 0.0});
    report.total_mean_ms += mean;
  }
  report.degenerate = !(report.total_mean_ms > 0.0);
  if (!report.degenerate) {
    for (auto& p : report.phases) p.share_pct = 100.0 * p.mean_ms / report.total_mean_ms;
  }
  return report;
}

void FlowConfig::validate() const {
  recognition.validate();
  transcription.validate();
  if (unlock_window_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "unlock_window_ms must be positive");
  if (max_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "max_attempts must be at least 1");
  if (challenge_expiry_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "challenge expiry must be positive");
}

std::string welcome_text(std::string_view full_name) {
  return "Welcome to the office, " + std::string(full_name);
}

std::string pin_message_text(std::string_view code) {
  return "Your door code is " + std::string(code);
}

// ---------------------------------------------------------------------------

AccessController::AccessController(FlowDeps deps, FlowConfig config, std::uint64_t seed)
    : deps_(std::move(deps)), config_(std::move(config)), rng_(seed) {
  config_.validate();
  if (deps_.state_root) std::filesystem::create_directories(*deps_.state_root);
}

AccessSession AccessController::start_session(SessionKind kind) {
  std::lock_guard lock(mutex_);
  if (active_id_) throw Error(ErrorCode::kBusy, "a session is already active at the door");
  char id[16];
  std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(next_session_++));
  AccessSession s;
  s.session_id = id;
  s.kind = kind;
  s.created_at = deps_.clock.now_ms();
  switch (kind) {
    case SessionKind::kEmployee: s.state = SessionState::kAwaitingCapture; break;
    case SessionKind::kGuest: s.state = SessionState::kAwaitingUtterance; break;
    case SessionKind::kDelivery: s.state = SessionState::kNotifyPending; break;
  }
  sessions_[s.session_id] = s;
  active_id_ = s.session_id;
  logger()->info("session {} started ({})", s.session_id, to_string(kind));
  return s;
}

AccessSession& AccessController::live_session(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kPrecondition, "unknown session '" + session_id + "'");
  if (it->second.terminal()) {
    throw Error(ErrorCode::kPrecondition, "session '" + session_id + "' has already ended");
  }
  return it->second;
}

void AccessController::archive(const AccessSession& s) {
  finished_order_.push_back(s.session_id);
  if (active_id_ == s.session_id) active_id_.reset();
  if (deps_.state_root) {
    std::ofstream out(*deps_.state_root / "sessions.jsonl", std::ios::app);
    out << s.dump().dump() << '\n';
  }
  while (finished_order_.size() > kHistoryLimit) {
    sessions_.erase(finished_order_.front());
    finished_order_.erase(finished_order_.begin());
  }
}

StepOutcome AccessController::finish(AccessSession& s, SessionState state, OutcomeKind kind,
                                     std::string message) {
  s.state = state;
  s.active_challenge.reset();
  StepOutcome out;
  out.kind = kind;
  out.state = state;
  out.message = std::move(message);
  if (s.employee_id) {
    out.employee_id = *s.employee_id;
    if (const auto* e = deps_.directory.find(*s.employee_id)) out.employee_name = e->full_name;
  }
  if (is_terminal(state)) {
    logger()->info("session {} ended: {}", s.session_id, to_string(state));
    archive(s);
  }
  return out;
}

StepOutcome AccessController::fail(AccessSession& s, const std::string& message) {
  s.error = message;
  logger()->warn("session {} failed: {}", s.session_id, message);
  return finish(s, SessionState::kError, OutcomeKind::kError, message);
}

bool AccessController::issue_challenge(AccessSession& s, const EmployeeRecord& employee) {
  const TimeMs now = deps_.clock.now_ms();
  std::string challenge_id = s.session_id + "-c" + std::to_string(s.issued_challenge_ids.size() + 1);
  PinChallenge challenge = generate_code(rng_, challenge_id, now);
  try {
    send_direct(deps_.notifier, employee, pin_message_text(challenge.code), now);
  } catch (const Error& e) {
    s.error = e.what();
    return false;
  }
  if (s.issued_challenge_ids.empty()) s.pin_phase_started_at = now;
  s.issued_challenge_ids.push_back(challenge.challenge_id);
  s.active_challenge = std::move(challenge);
  s.state = SessionState::kAwaitingCode;
  return true;
}

StepOutcome AccessController::handle_capture(const std::string& session_id, ByteView encrypted_probe) {
  std::lock_guard lock(mutex_);
  AccessSession& s = live_session(session_id);
  if (s.kind != SessionKind::kEmployee || s.state != SessionState::kAwaitingCapture) {
    throw Error(ErrorCode::kPrecondition, "session is not awaiting a capture");
  }
  const TimeMs received = deps_.clock.now_ms();
  s.phase_timings.push_back({Phase::kCapture, std::max<TimeMs>(0, received - s.created_at)});

  if (encrypted_probe.empty()) return fail(s, "probe could not be decrypted: empty upload");

  Bytes probe = xor_transform(encrypted_probe, deps_.key);
  MatchResult match;
  try {
    match = compare_probe(deps_.face, probe, deps_.directory);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kScriptedMiss) {
      wipe(probe);
      return fail(s, std::string("face comparison failed: ") + e.what());
    }
    // An unrecognizable probe is simply not a match.
    match = MatchResult{};
  }
  s.phase_timings.push_back({Phase::kCloudAuth, std::max<TimeMs>(0, deps_.clock.now_ms() - received)});
  s.similarity = match.similarity;

  const Decision decision = decide_access(match, config_.recognition);
  if (!decision.accepted) {
    wipe(probe);
    logger()->info("session {}: face rejected", s.session_id);
    return finish(s, SessionState::kDenied, OutcomeKind::kDenied);
  }

  const EmployeeRecord* employee = deps_.directory.find(decision.employee_id);
  if (!employee) {
    wipe(probe);
    return fail(s, "matched identity is not in the directory");
  }
  s.employee_id = employee->id;
  if (deps_.templates) {
    try {
      deps_.templates->maybe_store_template(employee->id, probe, match.similarity, deps_.clock.now_ms());
    } catch (const std::exception& e) {
      logger()->warn("template update for {} failed: {}", employee->id, e.what());
    }
  }
  wipe(probe);

  if (!issue_challenge(s, *employee)) return fail(s, "code dispatch failed: " + s.error);
  StepOutcome out;
  out.kind = OutcomeKind::kChallengeIssued;
  out.state = s.state;
  out.employee_id = employee->id;
  out.employee_name = employee->full_name;
  out.attempts_remaining = config_.max_attempts - s.attempts_used;
  out.challenge_id = s.active_challenge->challenge_id;
  return out;
}

StepOutcome AccessController::submit_code(const std::string& session_id, std::string_view entered) {
  std::lock_guard lock(mutex_);
  AccessSession& s = live_session(session_id);
  if (s.state != SessionState::kAwaitingCode || !s.active_challenge) {
    throw Error(ErrorCode::kPrecondition, "session is not awaiting a code");
  }
  const TimeMs now = deps_.clock.now_ms();
  if (now - s.active_challenge->issued_at > config_.challenge_expiry_ms) {
    return finish(s, SessionState::kExpired, OutcomeKind::kExpired, "code expired");
  }

  if (is_pin_format(entered) && constant_time_equal(entered, s.active_challenge->code)) {
    std::optional<UnlockWindow> window;
    try {
      deps_.lock.pulse_unlock(now);
      window = deps_.lock.last_window();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLockBusy) return fail(s, std::string("lock actuation failed: ") + e.what());
      // The door is still inside an earlier unlock window.
      window = deps_.lock.last_window();
    }
    // PIN entry spans from the first challenge to the unlock.
    s.phase_timings.push_back({Phase::kPinEntry, std::max<TimeMs>(0, now - s.pin_phase_started_at)});

    const std::string name = deps_.directory.find(*s.employee_id)->full_name;
    StepOutcome out = finish(s, SessionState::kUnlocked, OutcomeKind::kUnlocked, welcome_text(name));
    out.unlock = window;
    return out;
  }

  ++s.attempts_used;
  if (s.attempts_used >= config_.max_attempts) {
    return finish(s, SessionState::kLockedOut, OutcomeKind::kLockedOut);
  }
  const EmployeeRecord* employee = deps_.directory.find(*s.employee_id);
  if (!issue_challenge(s, *employee)) return fail(s, "code dispatch failed: " + s.error);
  StepOutcome out;
  out.kind = OutcomeKind::kNewChallenge;
  out.state = s.state;
  out.employee_id = employee->id;
  out.employee_name = employee->full_name;
  out.attempts_remaining = config_.max_attempts - s.attempts_used;
  out.challenge_id = s.active_challenge->challenge_id;
  return out;
}

StepOutcome AccessController::notify_guest_target(AccessSession& s, const EmployeeRecord& employee) {
  s.employee_id = employee.id;
  try {
    send_direct(deps_.notifier, employee, std::string(kGuestWaitingText), deps_.clock.now_ms());
  } catch (const Error& e) {
    return fail(s, std::string("guest notification failed: ") + e.what());
  }
  return finish(s, SessionState::kGuestNotified, OutcomeKind::kGuestNotified);
}

StepOutcome AccessController::handle_utterance(const std::string& session_id, ByteView audio) {
  std::lock_guard lock(mutex_);
  AccessSession& s = live_session(session_id);
  if (s.kind != SessionKind::kGuest || s.state != SessionState::kAwaitingUtterance) {
    throw Error(ErrorCode::kPrecondition, "session is not awaiting an utterance");
  }
  ++s.utterances;

  std::string transcript;
  try {
    transcript = transcribe(deps_.speech, audio);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kScriptedMiss && e.code() != ErrorCode::kEmptyInput) {
      return fail(s, std::string("transcription failed: ") + e.what());
    }
    StepOutcome out;
    out.kind = OutcomeKind::kRetryPrompt;
    out.state = s.state;
    return out;
  }

  const NameSimilarity& metric = deps_.metric ? *deps_.metric : default_metric_;
  const NameMatch match = match_name(transcript, deps_.directory, config_.transcription, metric);
  wipe(transcript);
  s.name_score = match.score;

  StepOutcome out;
  out.score = match.score;
  switch (match.band) {
    case Band::kNotify: {
      out = notify_guest_target(s, *deps_.directory.find(*match.employee_id));
      out.score = match.score;
      return out;
    }
    case Band::kConfirm: {
      const EmployeeRecord* e = deps_.directory.find(*match.employee_id);
      s.employee_id = e->id;
      s.state = SessionState::kAwaitingConfirmation;
      out.kind = OutcomeKind::kConfirmRequested;
      out.state = s.state;
      out.employee_id = e->id;
      out.employee_name = e->full_name;
      return out;
    }
    case Band::kRetry:
      out.kind = OutcomeKind::kRetryPrompt;
      out.state = s.state;
      return out;
  }
  return out;
}

StepOutcome AccessController::confirm_guest(const std::string& session_id, bool yes) {
  std::lock_guard lock(mutex_);
  AccessSession& s = live_session(session_id);
  if (s.state != SessionState::kAwaitingConfirmation || !s.employee_id) {
    throw Error(ErrorCode::kPrecondition, "session is not awaiting a confirmation");
  }
  if (yes) return notify_guest_target(s, *deps_.directory.find(*s.employee_id));
  s.employee_id.reset();
  s.name_score.reset();
  s.state = SessionState::kAwaitingUtterance;
  StepOutcome out;
  out.kind = OutcomeKind::kBackToUtterance;
  out.state = s.state;
  return out;
}

StepOutcome AccessController::handle_delivery(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  AccessSession& s = live_session(session_id);
  if (s.kind != SessionKind::kDelivery || s.state != SessionState::kNotifyPending) {
    throw Error(ErrorCode::kPrecondition, "session is not a pending delivery");
  }
  try {
    send_channel(deps_.notifier, config_.delivery_channel, std::string(kDeliveryText), deps_.clock.now_ms());
  } catch (const Error& e) {
    return fail(s, std::string("delivery notification failed: ") + e.what());
  }
  return finish(s, SessionState::kDeliveryNotified, OutcomeKind::kDeliveryNotified);
}

StepOutcome AccessController::abort_session(const std::string& session_id, const std::string& reason) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end() || it->second.terminal()) {
    StepOutcome out;
    out.kind = OutcomeKind::kError;
    out.state = it == sessions_.end() ? SessionState::kError : it->second.state;
    out.message = reason;
    return out;
  }
  return fail(it->second, "aborted: " + reason);
}

void AccessController::record_phase(const std::string& session_id, std::string_view phase,
                                    TimeMs duration_ms) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  it->second = gatekeeper::record_phase(std::move(it->second), phase, duration_ms);
}

std::optional<AccessSession> AccessController::active_session() const {
  std::lock_guard lock(mutex_);
  if (!active_id_) return std::nullopt;
  return sessions_.at(*active_id_);
}

std::optional<AccessSession> AccessController::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::vector<AccessSession> AccessController::history() const {
  std::lock_guard lock(mutex_);
  std::vector<AccessSession> out;
  out.reserve(finished_order_.size());
  for (const auto& id : finished_order_) out.push_back(sessions_.at(id));
  return out;
}

TimingReport AccessController::timing_report() const { return gatekeeper::timing_report(history()); }

}  // namespace gatekeeper
