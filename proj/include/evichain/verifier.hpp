#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "evichain/chain.hpp"

namespace evichain {

enum class Outcome { authentic, service_fault, evidence_fault, invalid_term, unproven };

enum class Finding {
  cert_window,       // a timestamp in the record falls outside the signer's window
  sig_fail,          // signature does not verify under the certified key
  key_unobtainable,  // no certificate (or pki entry) yields the signer's key
  no_evidence,       // no anchored evidence matches the record
  key_mismatch,      // the record answers a different (nonce, tag) than asked
  readout_missing,   // anchored evidence exists that the answer does not cover
  bct_mismatch,      // block creation time far from the claimed observation time
  poe_fail,          // membership proof does not verify against the agreed root
  evidence_withheld, // a node omitted evidence the quorum vouches for
  node_unreachable,  // a queried node gave no response
  quorum_divergence, // a node's answer deviates from the agreed one
  location_unverified,  // locations are claims; nearness is never proven remotely
};

const char* to_string(Outcome o);
const char* to_string(Finding f);
Outcome outcome_from_string(const std::string& s);    // ConfigError on unknown
Finding finding_from_string(const std::string& s);    // ConfigError on unknown

struct Verdict {
  Outcome outcome = Outcome::unproven;
  std::vector<Finding> findings;

  bool has(Finding f) const;
};

// A client's window onto the chain: queries every node, trusts an answer
// only when enough nodes agree. The threshold is three nodes, or a strict
// majority once networks grow past five. Nodes answering against the
// agreed value are remembered as divergent.
class ChainView {
 public:
  ChainView(std::vector<const ChainNode*> nodes, const PkiStub* pki, SimParams params,
            std::string client_name = "client", ChainObserver observer = {});

  std::size_t quorum_threshold() const;
  const std::vector<const ChainNode*>& nodes() const { return nodes_; }
  const PkiStub& pki() const { return *pki_; }
  const SimParams& params() const { return params_; }
  const std::string& client_name() const { return client_name_; }

  struct EvidenceQuorum {
    bool reachable = false;
    std::vector<EvidenceRecord> records;  // vouched for by at least threshold nodes
  };
  EvidenceQuorum evidence_quorum(const Digest& search_key) const;

  struct CertificateQuorum {
    bool reachable = false;
    std::optional<CertificateRecord> record;
  };
  CertificateQuorum certificate_quorum(const Digest& reader_kd) const;

  struct BctQuorum {
    bool reachable = false;
    std::optional<Timestamp> bct;
  };
  BctQuorum bct_quorum(const Digest& term_digest) const;

  struct RootQuorum {
    bool reachable = false;
    std::optional<Digest> root;
  };
  RootQuorum root_quorum(Timestamp bct) const;

  // First node-supplied proof that verifies against the agreed root.
  std::optional<ProofBundle> verified_proof(const Digest& term_digest, Timestamp bct) const;

  // Resolver over anchored certificates; a certificate only counts after it
  // itself validates against the pki. Time-free, so verification works the
  // same long after every window has closed.
  KeyResolver chain_cert_resolver() const;

  const std::set<int>& divergent_nodes() const { return divergents_; }
  void clear_divergents() { divergents_.clear(); }

 private:
  void record(const std::string& direction_to, const std::string& kind, Bytes payload) const;

  std::vector<const ChainNode*> nodes_;
  const PkiStub* pki_;
  SimParams params_;
  std::string client_name_;
  ChainObserver observer_;
  mutable std::set<int> divergents_;
};

// Checks one readout against the chain: signer certified, timestamp inside
// the certificate window, signature valid, matching evidence anchored with
// a verifying proof, and block creation time consistent with the claimed
// one. expected_search_key is what the client computed from the nonce and
// tag id it knows.
Verdict verify_readout(const Readout& ro, const Digest& expected_search_key,
                       const ChainView& view);

// Checks a service's whole answer for one search key: every returned
// readout must pass, and every anchored evidence must be covered by some
// returned readout. Any defect is the answering service's fault.
Verdict verify_service_answer(const Digest& expected_search_key,
                              std::span<const Readout> answer, const ChainView& view);

// Per-node audit against the quorum-agreed record set.
struct NodeVerdict {
  int node_id = 0;
  Verdict verdict;
};
std::vector<NodeVerdict> audit_evidence_service(const Digest& search_key,
                                                std::span<const EvidenceRecord> expected,
                                                const ChainView& view);

enum class TimeCheck { upheld, refuted, unproven };

// Did the term exist at least as early as claimed? Decided purely from the
// anchor: block creation time within tolerance of the claim plus a
// verifying proof. No certificate or pki window is consulted against the
// current time, so compromise or expiry after anchoring changes nothing.
// Requires claimed to be well apart from now.
TimeCheck check_elapsed_time(const Term& term, Timestamp claimed, Timestamp now,
                             const ChainView& view);

enum class AlibiCheck { consistent, fabrication_detected, unproven };

// Could this record have existed at the claimed past time? A readout needs
// matching anchored evidence whose block creation time is near the claim; a
// bare term needs the same for its own digest. Requires claimed to be well
// apart from now.
AlibiCheck check_alibi_readout(const Readout& ro, Timestamp claimed, Timestamp now,
                               const ChainView& view);
AlibiCheck check_alibi_term(const Term& term, Timestamp claimed, Timestamp now,
                            const ChainView& view);

}  // namespace evichain
