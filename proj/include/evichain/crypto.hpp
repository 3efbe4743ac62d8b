#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "evichain/common.hpp"

namespace evichain {

inline constexpr std::size_t kDigestSize = 32;

struct Digest {
  std::array<std::uint8_t, kDigestSize> v{};

  auto operator<=>(const Digest&) const = default;

  std::span<const std::uint8_t> bytes() const { return v; }
  std::string hex() const { return to_hex(v); }
  static Digest from_hex_string(std::string_view hex);
};

// Key and signature material is held as plain byte vectors so a different
// suite (other sizes, other algorithms) can sit behind the same interface.
struct PublicKey {
  Bytes bytes;
  auto operator<=>(const PublicKey&) const = default;
};

struct PrivateKey {
  Bytes bytes;
  auto operator<=>(const PrivateKey&) const = default;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct Signature {
  Bytes bytes;
  auto operator<=>(const Signature&) const = default;
};

// Hash plus signature scheme. The default is SHA-256 with Ed25519, which
// signs deterministically: the same message under the same key yields
// byte-identical signatures, a property the evidence linkage tests rely on.
class CryptoSuite {
 public:
  virtual ~CryptoSuite() = default;

  virtual std::string_view name() const = 0;
  virtual Digest hash(std::span<const std::uint8_t> data) const = 0;
  virtual KeyPair keypair_from_seed(std::uint64_t seed) const = 0;
  virtual Signature sign(std::span<const std::uint8_t> message, const PrivateKey& key) const = 0;
  virtual bool verify(std::span<const std::uint8_t> message, const Signature& sig,
                      const PublicKey& key) const = 0;
};

const CryptoSuite& default_suite();
const CryptoSuite& active_suite();
// nullptr restores the default. The pointer must outlive its use.
void set_active_suite(const CryptoSuite* suite);

// Convenience wrappers over the active suite.
Digest hash(std::span<const std::uint8_t> data);
Digest hash(const Bytes& data);
KeyPair generate_keypair(std::uint64_t seed);
Signature sign(std::span<const std::uint8_t> message, const PrivateKey& key);
bool verify(std::span<const std::uint8_t> message, const Signature& sig, const PublicKey& key);

Digest key_digest(const PublicKey& key);

}  // namespace evichain
