#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "evichain/crypto.hpp"
#include "evichain/encoding.hpp"
#include "evichain/proximity.hpp"
#include "evichain/tag.hpp"

namespace evichain {

// Nonce shared per shipment among the owning service, its clients, and the
// reader. It blinds the tag id inside the search key.
using RandomNumber = std::array<std::uint8_t, 16>;

// Full observation record, sent only to the owning service.
struct Readout {
  RandomNumber nonce{};
  TagId tag_id{};
  Timestamp time = 0;
  std::string location;  // label of the reader's site
  Bytes data;            // tag memory image after the visit
  Signature sig;         // over encode(search_key, content_digest)
  Digest key_digest;     // hash of the public key the reader claims to sign with

  Bytes encoded() const;
  static Readout decode(std::span<const std::uint8_t> bytes);
  bool operator==(const Readout&) const = default;
};

// Public companion of a readout: two digests, the same signature, the same
// claimed key. Carries no plaintext and goes to the chain.
struct Evidence {
  Digest search_key;      // hash of (nonce, tag id): lookup handle
  Digest content_digest;  // hash of (time, location, data): content binding
  Signature sig;
  Digest key_digest;

  Bytes encoded() const;
  static Evidence decode(std::span<const std::uint8_t> bytes);
  bool operator==(const Evidence&) const = default;
  auto operator<=>(const Evidence&) const = default;
};

Digest readout_search_key(const RandomNumber& nonce, const TagId& id);
Digest readout_content_digest(Timestamp time, std::string_view location,
                              std::span<const std::uint8_t> data);
// The message both records sign: encode(search_key digest, content digest).
Bytes signed_payload(const Digest& search_key, const Digest& content_digest);

Evidence evidence_of(const Readout& ro);
Digest readout_digest(const Readout& ro);
Digest evidence_digest(const Evidence& ev);

// One undelivered item plus where it is bound.
struct Delivery {
  std::variant<Readout, Evidence> payload;
  std::string destination;  // service name, or "node:<id>"

  bool is_evidence() const { return std::holds_alternative<Evidence>(payload); }
};

struct PlaintextRecord {
  TagId tag_id{};
  Bytes data;
  Timestamp seen_at = 0;
};

// Fixed reader with a certified keypair. Observation produces a readout and
// its evidence in one step: both enter the outbox or neither does.
class Reader {
 public:
  Reader(KeyPair certified, std::string owner_service, Location site, std::uint64_t forget_after,
         int submit_node = 0);

  const Digest& id() const { return id_; }  // hash of the certified public key
  const PublicKey& certified_public() const { return certified_.pub; }
  const std::string& owner() const { return owner_; }
  const Location& site() const { return site_; }
  int submit_node() const { return submit_node_; }
  bool tampered() const { return tampered_; }

  struct ObserveOptions {
    std::optional<Bytes> write_data;        // written to the tag before reading back
    std::optional<Timestamp> reported_time; // a lying reader's claimed time
  };

  // Throws OutOfRangeError when the tag is beyond read range. On success the
  // readout (to the owner) and evidence (to the chain) are enqueued together.
  std::pair<Readout, Evidence> observe(Tag& tag, Timestamp now, const RandomNumber& nonce,
                                       const ObserveOptions& opts, double read_range_m);

  // Attempts delivery of each queued item in order; the callback returns
  // true when the item was delivered and acknowledged. Items that fail stay
  // queued for the next flush. Returns the number of items removed.
  using DeliveryFn = std::function<bool(const Delivery&)>;
  std::size_t flush_outbox(const DeliveryFn& attempt);

  const std::deque<Delivery>& outbox() const { return outbox_; }

  // Drops plaintext recall entries older than forget_after.
  void forget_expired(Timestamp now);
  const std::vector<PlaintextRecord>& plaintext_records() const { return recall_; }
  bool remembers_plaintext() const { return !recall_.empty(); }

  // Physical compromise: the signing key is replaced with a fresh one while
  // the reader keeps claiming the certified key's digest.
  void tamper(Rng& rng);

  // Key theft: the adversary walks away with the active private key.
  const PrivateKey& active_private() const { return active_.priv; }
  const PublicKey& active_public() const { return active_.pub; }

 private:
  KeyPair certified_;
  KeyPair active_;  // differs from certified_ once tampered
  Digest id_;
  std::string owner_;
  Location site_;
  std::uint64_t forget_after_;
  int submit_node_;
  bool tampered_ = false;
  std::deque<Delivery> outbox_;
  std::vector<PlaintextRecord> recall_;
};

// Builds a readout plus matching evidence signed with an arbitrary key while
// claiming an arbitrary key digest. This is the adversary's tool; honest
// readers never call it.
std::pair<Readout, Evidence> forge_observation(const RandomNumber& nonce, const TagId& id,
                                               Timestamp claimed_time,
                                               std::string_view claimed_location,
                                               std::span<const std::uint8_t> data,
                                               const PrivateKey& signing_key,
                                               const Digest& claimed_key_digest);

}  // namespace evichain
