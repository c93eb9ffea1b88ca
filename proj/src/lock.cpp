#include "gatekeeper/lock.hpp"

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper {

std::string_view to_string(LineState state) {
  switch (state) {
    case LineState::kHeld: return "held";
    case LineState::kPulsed: return "pulsed";
    case LineState::kUnlockedWindowStart: return "unlockedWindowStart";
    case LineState::kUnlockedWindowEnd: return "unlockedWindowEnd";
  }
  return "held";
}

SimulatedLock::SimulatedLock(TimeMs unlock_window_ms) : window_ms_(unlock_window_ms) {
  if (window_ms_ <= 0) throw Error(ErrorCode::kInvalidArgument, "unlock window must be positive");
}

LockTimeline SimulatedLock::pulse_unlock(TimeMs now) {
  std::lock_guard lock(mutex_);
  if (has_window_ && now < window_.end) {
    throw Error(ErrorCode::kLockBusy, "unlock window already open");
  }
  window_ = UnlockWindow{now, now + window_ms_};
  has_window_ = true;
  LockTimeline delta{{
      {now, LineState::kPulsed},
      {now, LineState::kUnlockedWindowStart},
      {window_.end, LineState::kUnlockedWindowEnd},
  }};
  timeline_.events.insert(timeline_.events.end(), delta.events.begin(), delta.events.end());
  logger()->info("lock pulsed at {} ms, unlocked until {} ms", now, window_.end);
  return delta;
}

LockTimeline SimulatedLock::timeline() const {
  std::lock_guard lock(mutex_);
  return timeline_;
}

bool SimulatedLock::is_unlocked(TimeMs now) const {
  std::lock_guard lock(mutex_);
  return has_window_ && now >= window_.start && now < window_.end;
}

UnlockWindow SimulatedLock::last_window() const {
  std::lock_guard lock(mutex_);
  return window_;
}

}  // namespace gatekeeper
