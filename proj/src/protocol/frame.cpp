#include "gatekeeper/error.hpp"
#include "gatekeeper/protocol.hpp"

namespace gatekeeper::protocol {

using nlohmann::json;

Bytes frame_bytes(std::string_view payload) {
  if (payload.size() > kMaxPayload) {
    throw Error(ErrorCode::kProtocol, "frame payload of " + std::to_string(payload.size()) +
                                          " bytes exceeds the 16 MiB limit");
  }
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(kHeaderSize + payload.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes encode_frame(const Message& message) {
  validate(message);
  std::string payload;
  try {
    payload = to_json(message).dump();
  } catch (const json::type_error& e) {
    // invalid UTF-8 inside a string
    throw Error(ErrorCode::kProtocol, std::string("message is not encodable: ") + e.what());
  }
  return frame_bytes(payload);
}

DecodeResult decode_frame(ByteView input) {
  DecodeResult result;
  if (input.size() < kHeaderSize) return result;
  const std::uint32_t length = std::uint32_t{input[0]} << 24 | std::uint32_t{input[1]} << 16 |
                               std::uint32_t{input[2]} << 8 | std::uint32_t{input[3]};
  if (length > kMaxPayload) {
    result.status = DecodeStatus::kFatal;
    result.error = "declared frame length " + std::to_string(length) + " exceeds the 16 MiB limit";
    return result;
  }
  if (input.size() - kHeaderSize < length) return result;

  result.consumed = kHeaderSize + length;
  const auto body = input.subspan(kHeaderSize, length);
  const json doc = json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    result.status = DecodeStatus::kInvalid;
    result.error = "frame payload is not valid JSON";
    return result;
  }
  try {
    result.message = message_from_json(doc);
    result.status = DecodeStatus::kMessage;
  } catch (const Error& e) {
    result.status = DecodeStatus::kInvalid;
    result.error = e.what();
  } catch (const json::exception& e) {
    result.status = DecodeStatus::kInvalid;
    result.error = e.what();
  }
  return result;
}

}  // namespace gatekeeper::protocol
