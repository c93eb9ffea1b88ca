#include "gatekeeper/notify.hpp"

#include <httplib.h>

#include <algorithm>
#include <nlohmann/json.hpp>

#include "gatekeeper/error.hpp"
#include "gatekeeper/log.hpp"

namespace gatekeeper {

using nlohmann::json;

std::string_view to_string(TargetKind kind) {
  return kind == TargetKind::kDirect ? "direct" : "channel";
}

TargetKind parse_target_kind(std::string_view text) {
  if (text == "direct") return TargetKind::kDirect;
  if (text == "channel") return TargetKind::kChannel;
  throw Error(ErrorCode::kInvalidArgument, "unknown target kind '" + std::string(text) + "'");
}

DeliveryReceipt RecordingSink::dispatch(const Notification& notification) {
  if (notification.text.empty()) throw Error(ErrorCode::kInvalidArgument, "notification text is empty");
  std::lock_guard lock(mutex_);
  if (!available_) throw Error(ErrorCode::kDispatch, "notification sink unavailable");
  DeliveryReceipt receipt{"rec-" + std::to_string(next_id_++), notification};
  receipts_.push_back(receipt);
  return receipt;
}

void RecordingSink::set_available(bool available) {
  std::lock_guard lock(mutex_);
  available_ = available;
}

std::vector<DeliveryReceipt> RecordingSink::receipts() const {
  std::lock_guard lock(mutex_);
  return receipts_;
}

std::size_t RecordingSink::count() const {
  std::lock_guard lock(mutex_);
  return receipts_.size();
}

std::size_t RecordingSink::count(TargetKind kind) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(receipts_.begin(), receipts_.end(), [&](const auto& r) {
    return r.notification.target_kind == kind;
  }));
}

void RecordingSink::clear() {
  std::lock_guard lock(mutex_);
  receipts_.clear();
}

void RecordingSink::dump_jsonl(std::ostream& out) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : receipts_) {
    out << json{{"id", r.id},
                {"targetKind", to_string(r.notification.target_kind)},
                {"target", r.notification.target},
                {"text", r.notification.text},
                {"dispatchedAt", r.notification.dispatched_at}}
               .dump()
        << '\n';
  }
}

WebhookSink::WebhookSink(std::string url, int timeout_ms) : timeout_ms_(timeout_ms) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "webhook URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

DeliveryReceipt WebhookSink::dispatch(const Notification& notification) {
  if (notification.text.empty()) throw Error(ErrorCode::kInvalidArgument, "notification text is empty");
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
  client.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
  client.set_write_timeout(std::chrono::milliseconds(timeout_ms_));

  const json body{{"target", notification.target}, {"text", notification.text}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kDispatch, "webhook transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kDispatch, "webhook returned HTTP " + std::to_string(res->status));
  }

  DeliveryReceipt receipt{{}, notification};
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_object() && reply.contains("id") && reply["id"].is_string()) {
    receipt.id = reply["id"].get<std::string>();
  } else {
    std::lock_guard lock(mutex_);
    receipt.id = "wh-" + std::to_string(next_id_++);
  }
  return receipt;
}

DeliveryReceipt send_direct(NotificationSink& sink, const EmployeeRecord& employee,
                            const std::string& text, TimeMs now) {
  if (employee.notify_handle.empty()) {
    throw Error(ErrorCode::kPrecondition, "employee '" + employee.id + "' has no notify handle");
  }
  auto receipt = sink.dispatch(Notification{TargetKind::kDirect, employee.notify_handle, text, now});
  logger()->info("direct message to employee {} delivered ({})", employee.id, receipt.id);
  return receipt;
}

DeliveryReceipt send_channel(NotificationSink& sink, const std::string& channel,
                             const std::string& text, TimeMs now) {
  if (channel.empty()) throw Error(ErrorCode::kPrecondition, "no notification channel configured");
  auto receipt = sink.dispatch(Notification{TargetKind::kChannel, channel, text, now});
  logger()->info("channel message to {} delivered ({}): {}", channel, receipt.id, text);
  return receipt;
}

}  // namespace gatekeeper
