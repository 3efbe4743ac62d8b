#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "evichain/merkle.hpp"
#include "evichain/reader.hpp"

namespace evichain {

// Mock of the on-ledger digest registry: a first-write-wins map from digest
// to block number, with gas accounting that mirrors the measured costs of
// the real contract. Reads are free.
class AnchorContract {
 public:
  static constexpr std::uint64_t kDeployGas = 149'119;
  static constexpr std::uint64_t kStoreGas = 44'241;

  AnchorContract() : gas_used_(kDeployGas) {}

  // Returns whether the digest was already stored. Only a first-time store
  // writes state and burns store gas. block_no must be positive because 0
  // is the "not stored" sentinel.
  bool store(const Digest& digest, std::uint64_t block_no);

  bool is_stored(const Digest& digest) const { return entries_.count(digest) > 0; }
  std::uint64_t get_stored(const Digest& digest) const;  // 0 when absent

  std::uint64_t gas_used() const { return gas_used_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Digest, std::uint64_t> entries_;
  std::uint64_t gas_used_;
};

// Short-term promise, signed by the aggregation service, that the listed
// evidence digests will be in the next anchored tree.
struct BulkProof {
  std::uint64_t window_id = 0;
  std::vector<Digest> covered;
  Signature sig;

  Bytes signed_payload() const;
};

bool verify_bulk_proof(const BulkProof& bp, const PublicKey& service_key);

// Result of anchoring one window: the tree root now held by the contract
// and one membership proof per evidence digest.
struct AnchorBatch {
  std::uint64_t window_id = 0;
  Digest root;
  std::uint64_t block_no = 0;
  std::map<Digest, MerkleProof> proofs;
};

// Collects evidences between anchorings. Periodically builds a Merkle tree
// over the window, stores only the root in the contract, and hands out
// per-evidence proofs. One contract write covers any number of evidences.
class EvidenceAggregator {
 public:
  explicit EvidenceAggregator(KeyPair key) : key_(std::move(key)) {}

  const PublicKey& public_key() const { return key_.pub; }

  void add(const Evidence& ev);
  std::size_t window_size() const { return window_.size(); }

  // Promise for the current, not yet anchored window.
  BulkProof issue_bulk_proof() const;

  // Anchors the current window and starts the next one. Empty window
  // anchors nothing. omit lets a faulty service break its own promise.
  std::optional<AnchorBatch> anchor(AnchorContract& contract, std::uint64_t block_no,
                                    const std::vector<Digest>& omit = {});

 private:
  KeyPair key_;
  std::uint64_t next_window_ = 1;
  std::vector<Digest> window_;
};

// After anchoring, every digest promised by the bulk proof must have a
// verifying membership proof against a root the contract holds. A missing
// or non-verifying digest means the aggregation service broke its promise.
struct ReconfirmResult {
  bool ok = false;
  std::vector<Digest> missing;
};

ReconfirmResult reconfirm_bulk(const BulkProof& bp, const AnchorBatch& batch,
                               const AnchorContract& contract);

}  // namespace evichain
