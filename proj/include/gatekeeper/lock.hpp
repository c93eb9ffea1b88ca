#pragma once

#include <mutex>
#include <string_view>
#include <vector>

#include "gatekeeper/clock.hpp"

namespace gatekeeper {

// The office lock is held shut by a constant 12 V line. Dropping the line to
// 0 V and raising it again (a pulse) releases the door for a fixed window.
enum class LineState { kHeld, kPulsed, kUnlockedWindowStart, kUnlockedWindowEnd };

std::string_view to_string(LineState state);

struct LockEvent {
  TimeMs at = 0;
  LineState state = LineState::kHeld;

  bool operator==(const LockEvent&) const = default;
};

struct LockTimeline {
  std::vector<LockEvent> events;
};

struct UnlockWindow {
  TimeMs start = 0;
  TimeMs end = 0;
};

class LockActuator {
 public:
  virtual ~LockActuator() = default;
  // Pulses the line at `now`. Throws Error(kLockBusy) while a window is open.
  // Returns the events this pulse added.
  virtual LockTimeline pulse_unlock(TimeMs now) = 0;
  virtual LockTimeline timeline() const = 0;
  virtual bool is_unlocked(TimeMs now) const = 0;
  virtual UnlockWindow last_window() const = 0;
};

// Records the line on a (usually simulated) timeline. The window end is
// scheduled at pulse time, so the timeline is complete as soon as the pulse
// returns. Pulses are serialized.
class SimulatedLock final : public LockActuator {
 public:
  explicit SimulatedLock(TimeMs unlock_window_ms = 5000);

  LockTimeline pulse_unlock(TimeMs now) override;
  LockTimeline timeline() const override;
  bool is_unlocked(TimeMs now) const override;
  UnlockWindow last_window() const override;

  TimeMs unlock_window_ms() const { return window_ms_; }

 private:
  TimeMs window_ms_;
  mutable std::mutex mutex_;
  LockTimeline timeline_;
  bool has_window_ = false;
  UnlockWindow window_;
};

inline LockTimeline pulse_unlock(LockActuator& actuator, TimeMs now) {
  return actuator.pulse_unlock(now);
}

}  // namespace gatekeeper
