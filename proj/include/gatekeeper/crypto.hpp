#pragma once

#include <string_view>

#include "gatekeeper/bytes.hpp"

namespace gatekeeper {

// Repeating-key XOR applied to probe images on the door unit before upload
// and undone on the controller before comparison.
//
// NOT cryptographically strong: a single known plaintext reveals the key
// stream. It keeps casual observers of the link and of any cloud bucket from
// viewing raw images; the TCP link itself carries no transport security.
class CipherKey {
 public:
  static constexpr std::size_t kMinLength = 16;

  // Throws Error(kInvalidArgument) for keys shorter than kMinLength or made
  // of zero bytes only.
  explicit CipherKey(Bytes key_bytes);

  // Parses the `cipher_key_hex` config entry (even length, >= 32 hex chars).
  static CipherKey from_hex(std::string_view hex);

  ByteView bytes() const { return key_; }
  std::size_t size() const { return key_.size(); }

 private:
  Bytes key_;
};

// out[i] = data[i] ^ key[i % key.size()]. Its own inverse.
Bytes xor_transform(ByteView data, const CipherKey& key);

}  // namespace gatekeeper
