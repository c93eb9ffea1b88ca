#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace gatekeeper {

// Milliseconds on a monotonic timeline.
using TimeMs = std::int64_t;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimeMs now_ms() const = 0;
};

class SteadyClock final : public Clock {
 public:
  TimeMs now_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

// Simulated time for tests and scenario replay. Thread-safe.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimeMs start = 0) : now_(start) {}

  TimeMs now_ms() const override { return now_.load(); }
  void advance(TimeMs delta) { now_.fetch_add(delta); }
  void set(TimeMs t) { now_.store(t); }

 private:
  std::atomic<TimeMs> now_;
};

}  // namespace gatekeeper
