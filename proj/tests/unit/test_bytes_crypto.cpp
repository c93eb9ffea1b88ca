#include <gtest/gtest.h>

#include <random>

#include "gatekeeper/bytes.hpp"
#include "gatekeeper/crypto.hpp"
#include "gatekeeper/error.hpp"

using namespace gatekeeper;

namespace {

CipherKey key_of(std::initializer_list<std::uint8_t> head) {
  Bytes k(head);
  k.resize(CipherKey::kMinLength, 0);
  return CipherKey(k);
}

}  // namespace

TEST(Bytes, Base64RoundTripAndKnownVector) {
  EXPECT_EQ(base64_encode(to_bytes("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_encode(to_bytes("fo")), "Zm8=");
  EXPECT_EQ(to_string(base64_decode("Zm8=")), "fo");
  EXPECT_EQ(base64_encode(Bytes{}), "");
  EXPECT_TRUE(base64_decode("").empty());
  std::mt19937 rng(5);
  for (int n = 0; n < 64; ++n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
}

TEST(Bytes, Base64RejectsGarbage) {
  EXPECT_THROW(base64_decode("abc"), Error);
  EXPECT_THROW(base64_decode("ab!d"), Error);
}

TEST(Bytes, HexAndDigest) {
  EXPECT_EQ(hex_encode(Bytes{0x00, 0xab, 0xff}), "00abff");
  EXPECT_EQ(hex_decode("00ABff"), (Bytes{0x00, 0xab, 0xff}));
  EXPECT_THROW(hex_decode("abc"), Error);
  EXPECT_THROW(hex_decode("zz"), Error);
  EXPECT_EQ(sha256_hex(to_bytes("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Bytes, WipeZeroesAndClears) {
  Bytes b{1, 2, 3};
  wipe(b);
  EXPECT_TRUE(b.empty());
  std::string s = "secret";
  wipe(s);
  EXPECT_TRUE(s.empty());
}

TEST(Bytes, MediaTagIsFirstEightBytes) {
  EXPECT_EQ(media_tag(to_bytes("ABCDEFGHIJ")), "ABCDEFGH");
  EXPECT_EQ(media_tag(to_bytes("abc")), "abc");
}

TEST(Crypto, SingleByteExample) {
  // data [0x0F] with a key starting 0xFF
  const CipherKey k = key_of({0xFF});
  EXPECT_EQ(xor_transform(Bytes{0x0F}, k), (Bytes{0xF0}));
}

TEST(Crypto, KeyPolicy) {
  EXPECT_THROW(CipherKey(Bytes(15, 1)), Error);
  EXPECT_THROW(CipherKey(Bytes(16, 0)), Error);
  EXPECT_NO_THROW(CipherKey(Bytes(16, 1)));
  EXPECT_THROW(CipherKey::from_hex("00112233"), Error);
  EXPECT_THROW(CipherKey::from_hex("0011223344556677889900112233445"), Error);  // odd length
  EXPECT_EQ(CipherKey::from_hex("000102030405060708090a0b0c0d0e0f").size(), 16u);
}

TEST(Crypto, KeyCycleMatchesDefinition) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Bytes key(16 + rng() % 17);
    for (auto& x : key) x = static_cast<std::uint8_t>(rng());
    key[0] |= 1;
    Bytes data(rng() % 200);
    for (auto& x : data) x = static_cast<std::uint8_t>(rng());
    const CipherKey k(key);
    const Bytes out = xor_transform(data, k);
    ASSERT_EQ(out.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      ASSERT_EQ(out[i], static_cast<std::uint8_t>(data[i] ^ key[i % key.size()]));
    }
  }
}

TEST(Crypto, InvolutionOnRandomPairs) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    Bytes key(16 + rng() % 48);
    for (auto& x : key) x = static_cast<std::uint8_t>(rng());
    key.back() |= 0x80;
    Bytes data(rng() % 300);
    for (auto& x : data) x = static_cast<std::uint8_t>(rng());
    const CipherKey k(key);
    ASSERT_EQ(xor_transform(xor_transform(data, k), k), data);
  }
}

TEST(Crypto, EmptyDataStaysEmpty) { EXPECT_TRUE(xor_transform(Bytes{}, key_of({7})).empty()); }
