#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gatekeeper {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

// Overwrites then releases a buffer that held biometric material.
void wipe(Bytes& buffer) noexcept;
void wipe(std::string& buffer) noexcept;

std::string base64_encode(ByteView data);
// Throws Error(kInvalidArgument) on malformed input.
Bytes base64_decode(std::string_view text);

std::string hex_encode(ByteView data);
// Throws Error(kInvalidArgument) on odd length or non-hex characters.
Bytes hex_decode(std::string_view text);

std::string sha256_hex(ByteView data);

// Scripted providers key their answers on the first eight bytes of a buffer.
inline constexpr std::size_t kTagLength = 8;
std::string media_tag(ByteView data);

}  // namespace gatekeeper
