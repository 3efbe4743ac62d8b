#pragma once

#include <map>
#include <optional>
#include <string>

#include "evichain/crypto.hpp"
#include "evichain/encoding.hpp"
#include "evichain/proximity.hpp"

namespace evichain {

// Binds a reader public key to a validity window, signed by the vendor.
// Revocation is expressed as issuing with an early expiry; the window is
// fixed at issue time and never mutated.
struct Certificate {
  PublicKey reader_public;
  Timestamp valid_from = 0;
  Timestamp valid_until = 0;
  Signature sig;             // over encode(reader_public, valid_from, valid_until)
  Digest vendor_key_digest;  // hash of the vendor public key

  Bytes encoded() const;
  static Certificate decode(std::span<const std::uint8_t> bytes);
  bool operator==(const Certificate&) const = default;

  // The chain indexes certificates by the certified key's digest.
  Digest reader_key_digest() const;
  bool covers(Timestamp t) const { return valid_from <= t && t <= valid_until; }
};

Bytes certificate_signed_payload(const PublicKey& reader_public, Timestamp valid_from,
                                 Timestamp valid_until);
Digest certificate_digest(const Certificate& cert);

class Vendor {
 public:
  Vendor(std::string name, KeyPair key);

  const std::string& name() const { return name_; }
  const PublicKey& public_key() const { return key_.pub; }
  const Digest& key_digest() const { return key_digest_; }

  // Throws WindowError unless valid_from < valid_until.
  Certificate make_certificate(const PublicKey& reader_public, Timestamp valid_from,
                               Timestamp valid_until) const;

 private:
  std::string name_;
  KeyPair key_;
  Digest key_digest_;
};

// Stand-in for the external PKI: a table mapping vendor key digests to keys
// with their own validity windows, loaded from configuration.
struct PkiEntry {
  PublicKey key;
  Timestamp valid_from = 0;
  Timestamp valid_until = 0;
};

class PkiStub {
 public:
  void add(const PkiEntry& entry);  // keyed by hash of entry.key

  // The key, provided its window covers t.
  std::optional<PublicKey> lookup(const Digest& digest, Timestamp t) const;
  const PkiEntry* find(const Digest& digest) const;

 private:
  std::map<Digest, PkiEntry> entries_;
};

}  // namespace evichain
