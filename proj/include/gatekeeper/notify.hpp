#pragma once

#include <cstdint>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "gatekeeper/clock.hpp"
#include "gatekeeper/directory.hpp"

namespace gatekeeper {

enum class TargetKind { kDirect, kChannel };

std::string_view to_string(TargetKind kind);
TargetKind parse_target_kind(std::string_view text);

struct Notification {
  TargetKind target_kind = TargetKind::kDirect;
  std::string target;  // notify handle or channel name
  std::string text;
  TimeMs dispatched_at = 0;
};

struct DeliveryReceipt {
  std::string id;
  Notification notification;
};

// Where notifications go. Implementations accept concurrent sends and raise
// Error(kDispatch) when the message could not be delivered.
class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  virtual DeliveryReceipt dispatch(const Notification& notification) = 0;
};

// Keeps every notification in memory; tests read PIN codes back out of it.
class RecordingSink final : public NotificationSink {
 public:
  DeliveryReceipt dispatch(const Notification& notification) override;

  // While unavailable every dispatch fails.
  void set_available(bool available);

  std::vector<DeliveryReceipt> receipts() const;
  std::size_t count() const;
  std::size_t count(TargetKind kind) const;
  void clear();

  // One JSON object per line: {id, targetKind, target, text, dispatchedAt}.
  void dump_jsonl(std::ostream& out) const;

 private:
  mutable std::mutex mutex_;
  std::vector<DeliveryReceipt> receipts_;
  std::uint64_t next_id_ = 1;
  bool available_ = true;
};

// POSTs {"target": ..., "text": ...} as JSON to a webhook URL, once. Any
// transport failure or non-2xx status becomes Error(kDispatch). The receipt
// id is the response's "id" field when present, otherwise a local counter.
class WebhookSink final : public NotificationSink {
 public:
  explicit WebhookSink(std::string url, int timeout_ms = 5000);
  DeliveryReceipt dispatch(const Notification& notification) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  int timeout_ms_;
  std::mutex mutex_;
  std::uint64_t next_id_ = 1;
};

// Throws Error(kPrecondition) when the employee has no notify handle.
DeliveryReceipt send_direct(NotificationSink& sink, const EmployeeRecord& employee,
                            const std::string& text, TimeMs now = 0);
// Throws Error(kPrecondition) when no channel is configured.
DeliveryReceipt send_channel(NotificationSink& sink, const std::string& channel,
                             const std::string& text, TimeMs now = 0);

}  // namespace gatekeeper
