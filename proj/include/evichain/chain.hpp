#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "evichain/merkle.hpp"
#include "evichain/proximity.hpp"
#include "evichain/reader.hpp"
#include "evichain/vendor.hpp"

namespace evichain {

// Anything a chain node will store: evidences and reader certificates.
using Term = std::variant<Evidence, Certificate>;

Bytes encode_term(const Term& term);
Term decode_term(std::span<const std::uint8_t> bytes);
Digest term_digest(const Term& term);

// Why a term is rejected. A term is invalid when its signer's key cannot be
// obtained, when a timestamp inside it falls outside the signer's
// certificate window, or when the signature does not verify. An invalid
// subterm invalidates whatever contains it.
enum class InvalidReason { key_unobtainable, cert_window, sig_fail };

struct CertWindow {
  PublicKey key;
  Timestamp valid_from = 0;
  Timestamp valid_until = 0;
};

// Candidate credentials for a key digest, best first. Empty means the key
// cannot be obtained at all.
using KeyResolver = std::function<std::vector<CertWindow>(const Digest&)>;

// Core of term validation: resolves the signer, checks every embedded
// timestamp against the credential window, then the signature. With several
// candidate credentials, any fully passing one validates the term.
std::optional<InvalidReason> check_signed_term(std::span<const std::uint8_t> payload,
                                               const Signature& sig, const Digest& signer_digest,
                                               std::span<const Timestamp> embedded_times,
                                               const KeyResolver& resolve);

std::optional<InvalidReason> validate_evidence(const Evidence& ev, const KeyResolver& resolve);
std::optional<InvalidReason> validate_readout(const Readout& ro, const KeyResolver& resolve);
std::optional<InvalidReason> validate_certificate(const Certificate& cert, const PkiStub& pki);

KeyResolver pki_resolver(const PkiStub& pki);

struct Block {
  std::uint64_t height = 0;
  Digest prev_digest;  // all zero for the genesis block
  Timestamp created_at = 0;
  std::vector<Term> terms;
  Digest merkle_root;          // over term digests, in order
  std::uint64_t work_cost = 0;  // accounted production effort, not encoded

  Bytes encoded() const;
  static Block decode(std::span<const std::uint8_t> bytes);
};

Digest block_digest(const Block& b);
Digest block_terms_root(std::span<const Term> terms);

// Structural check of a full ledger copy: heights contiguous from zero,
// prev links match, merkle roots match the contained terms.
bool verify_ledger(std::span<const Block> ledger);
// Same, over raw encoded blocks with the expected tip digest pinned. Any
// single-bit mutation anywhere is detected.
bool verify_encoded_ledger(std::span<const Bytes> encoded_blocks, const Digest& expected_tip);

enum class FaultMode { correct, silent, lying };

struct EvidenceRecord {
  Evidence ev;
  Timestamp bct = 0;  // creation time of the first block containing it

  bool operator==(const EvidenceRecord&) const = default;
};

struct CertificateRecord {
  Certificate cert;
  Timestamp bct = 0;

  bool operator==(const CertificateRecord&) const = default;
};

struct ProofBundle {
  Digest root;
  MerkleProof proof;
};

// Query responses distinguish "node did not answer" from "node answered:
// nothing there". Silent nodes never respond.
template <typename T>
struct RpcResult {
  bool responded = false;
  T value{};
};

// Per-query misbehaviour of a lying node. Gossip stays honest; the client
// facing RPC surface is where these attacks live.
struct LieScript {
  bool withhold_evidence = false;  // pretend matching evidence does not exist
  bool garbage_proofs = false;     // fabricate roots and proofs out of thin air
  std::map<Digest, std::vector<EvidenceRecord>> fabricated;  // extra answers per search key
};

using GossipItem = std::variant<Term, Block>;

// One replica: validates incoming terms, holds a full ledger copy, indexes
// confirmed terms, and answers client queries according to its fault mode.
class ChainNode {
 public:
  ChainNode(int id, const PkiStub* pki, FaultMode mode = FaultMode::correct);

  int id() const { return id_; }
  FaultMode fault() const { return fault_; }
  void set_fault(FaultMode mode) { fault_ = mode; }
  LieScript& lies() { return lies_; }

  enum class Ingest { accepted, forgotten };

  // Validates and stores a term; invalid terms are forgotten, duplicates
  // are accepted without effect.
  Ingest submit(const Term& term);
  bool knows_term(const Digest& digest) const { return known_.count(digest) > 0; }
  const Term* find_term(const Digest& digest) const;

  bool has_block(const Digest& digest) const { return block_index_.count(digest) > 0; }
  // Appends when the block extends this replica's tip and is fully valid;
  // blocks arriving early wait in a buffer, invalid ones are dropped.
  bool receive_block(const Block& block);

  // Items learned since the last call, in arrival order, for forwarding.
  // Silent nodes forward nothing.
  std::vector<GossipItem> take_fresh();

  Block produce_block(Timestamp now, std::uint64_t work_cost);
  std::vector<Digest> pending_terms() const;  // known but not yet confirmed
  bool idle() const { return fresh_.empty() && holdback_.empty(); }

  const std::vector<Block>& ledger() const { return ledger_; }
  std::uint64_t work_spent() const { return work_spent_; }

  // Client RPC surface.
  RpcResult<std::vector<EvidenceRecord>> query_evidence(const Digest& search_key) const;
  RpcResult<std::optional<CertificateRecord>> query_certificate(const Digest& reader_kd) const;
  RpcResult<std::optional<Timestamp>> bct_of(const Digest& term_digest) const;
  RpcResult<std::optional<Digest>> root_at(Timestamp bct) const;
  RpcResult<std::optional<ProofBundle>> prove_existence(const Digest& term_digest,
                                                        Timestamp bct) const;

  // History rewrite: drops one term and re-produces every block from there
  // to the tip, paying work for each. Returns the number of re-mined
  // blocks. The result is internally consistent but diverges from every
  // honest replica.
  std::size_t rewrite_without_term(const Digest& term_digest, std::uint64_t work_cost_per_block);

 private:
  Ingest ingest_term(const Term& term, bool mark_fresh);
  bool try_append(const Block& block);
  void index_block(std::size_t height);
  void rebuild_indexes();
  std::vector<CertWindow> certificates_for(const Digest& key_digest) const;
  bool term_valid_here(const Term& term,
                       const std::vector<const Certificate*>& extra_certs) const;

  int id_;
  const PkiStub* pki_;
  FaultMode fault_;
  LieScript lies_;

  std::map<Digest, Term> known_;
  std::vector<Digest> arrival_order_;
  std::deque<GossipItem> fresh_;

  std::vector<Block> ledger_;
  std::map<Digest, std::size_t> block_index_;      // block digest -> height
  std::map<Timestamp, std::size_t> block_by_time_;  // created_at -> height
  std::map<Digest, Timestamp> confirmed_;           // term digest -> bct
  std::map<Digest, std::vector<Digest>> evidence_by_key_;
  std::map<Digest, std::vector<Digest>> certificate_by_key_;
  std::map<std::uint64_t, Block> holdback_;  // early blocks by height
  std::uint64_t work_spent_ = 0;
};

struct ChainMessage {
  std::string from;
  std::string to;
  std::string kind;  // "term" or "block"
  Bytes payload;
};

using ChainObserver = std::function<void(const ChainMessage&)>;

// Fixed set of replicas joined by a gossip overlay. One producer (node 0 by
// default) creates a block every block_interval ticks; there are no forks.
class ChainNetwork {
 public:
  ChainNetwork(std::size_t node_count, const PkiStub* pki, SimParams params);

  std::size_t size() const { return nodes_.size(); }
  ChainNode& node(std::size_t i) { return nodes_.at(i); }
  const ChainNode& node(std::size_t i) const { return nodes_.at(i); }

  void set_observer(ChainObserver obs) { observer_ = std::move(obs); }
  void set_producer(int id) { producer_ = id; }
  int producer() const { return producer_; }

  void connect_all();
  void connect_ring();
  void connect(std::size_t a, std::size_t b);

  ChainNode::Ingest submit(std::size_t node_id, const Term& term);

  // One forwarding round: every node pushes its fresh items to neighbours
  // that lack them. Returns the number of messages sent.
  std::size_t gossip_round();

  // Produces a block when now is a positive multiple of block_interval.
  std::optional<Block> on_tick(Timestamp now);

  bool quiesced() const;

  std::vector<const ChainNode*> all_nodes() const;

 private:
  std::vector<ChainNode> nodes_;
  std::vector<std::vector<std::size_t>> neighbours_;
  SimParams params_;
  int producer_ = 0;
  ChainObserver observer_;
};

}  // namespace evichain
