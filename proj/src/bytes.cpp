#include "gatekeeper/bytes.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <cstring>

#include "gatekeeper/error.hpp"

namespace gatekeeper {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kIngestion: return "ingestion";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kProviderUnavailable: return "provider-unavailable";
    case ErrorCode::kScriptedMiss: return "scripted-miss";
    case ErrorCode::kEmptyCollection: return "empty-collection";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kBusy: return "busy";
    case ErrorCode::kLockBusy: return "lock-busy";
    case ErrorCode::kDispatch: return "dispatch";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kDevice: return "device";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

void wipe(Bytes& buffer) noexcept {
  // volatile write so the fill is not elided before the free
  volatile std::uint8_t* p = buffer.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) p[i] = 0;
  buffer.clear();
  buffer.shrink_to_fit();
}

void wipe(std::string& buffer) noexcept {
  volatile char* p = buffer.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) p[i] = 0;
  buffer.clear();
  buffer.shrink_to_fit();
}

std::string base64_encode(ByteView data) {
  if (data.empty()) return {};
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "base64 length is not a multiple of 4");
  }
  // EVP_DecodeBlock accepts (and skips) whitespace, so reject it up front.
  const auto valid = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/' || c == '=';
  };
  if (!std::all_of(text.begin(), text.end(), valid)) {
    throw Error(ErrorCode::kInvalidArgument, "base64 contains invalid characters");
  }
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  if (std::find(text.begin(), text.end() - static_cast<std::ptrdiff_t>(padding), '=') !=
      text.end() - static_cast<std::ptrdiff_t>(padding)) {
    throw Error(ErrorCode::kInvalidArgument, "base64 padding in the middle of input");
  }
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "malformed base64");
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string hex_encode(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

Bytes hex_decode(std::string_view text) {
  if (text.size() % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "hex string has odd length");
  const auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::kInvalidArgument, std::string("invalid hex character '") + c + "'");
  };
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(nibble(text[i]) << 4 | nibble(text[i + 1])));
  }
  return out;
}

std::string sha256_hex(ByteView data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  return hex_encode(ByteView(digest, len));
}

std::string media_tag(ByteView data) {
  return to_string(data.first(std::min(kTagLength, data.size())));
}

}  // namespace gatekeeper
