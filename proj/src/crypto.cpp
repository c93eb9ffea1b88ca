#include "gatekeeper/crypto.hpp"

#include <algorithm>

#include "gatekeeper/error.hpp"

namespace gatekeeper {

CipherKey::CipherKey(Bytes key_bytes) : key_(std::move(key_bytes)) {
  if (key_.size() < kMinLength) {
    throw Error(ErrorCode::kInvalidArgument,
                "cipher key must be at least " + std::to_string(kMinLength) + " bytes");
  }
  if (std::all_of(key_.begin(), key_.end(), [](std::uint8_t b) { return b == 0; })) {
    throw Error(ErrorCode::kInvalidArgument, "cipher key must not be all zero bytes");
  }
}

CipherKey CipherKey::from_hex(std::string_view hex) { return CipherKey(hex_decode(hex)); }

Bytes xor_transform(ByteView data, const CipherKey& key) {
  const ByteView k = key.bytes();
  Bytes out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = data[i] ^ k[i % k.size()];
  }
  return out;
}

}  // namespace gatekeeper
