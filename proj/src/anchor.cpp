#include "evichain/anchor.hpp"

#include <algorithm>

#include "evichain/encoding.hpp"

namespace evichain {

bool AnchorContract::store(const Digest& digest, std::uint64_t block_no) {
  if (block_no == 0) {
    throw ParameterError("block number must be positive");
  }
  if (entries_.count(digest) > 0) {
    return true;  // already stored: no write, no gas
  }
  entries_.emplace(digest, block_no);
  gas_used_ += kStoreGas;
  return false;
}

std::uint64_t AnchorContract::get_stored(const Digest& digest) const {
  const auto it = entries_.find(digest);
  return it == entries_.end() ? 0 : it->second;
}

Bytes BulkProof::signed_payload() const {
  Encoder enc;
  enc.u64(FieldTag::window_id, window_id);
  for (const Digest& d : covered) {
    enc.digest(FieldTag::digest, d);
  }
  return enc.take();
}

bool verify_bulk_proof(const BulkProof& bp, const PublicKey& service_key) {
  return verify(bp.signed_payload(), bp.sig, service_key);
}

void EvidenceAggregator::add(const Evidence& ev) {
  const Digest d = evidence_digest(ev);
  if (std::find(window_.begin(), window_.end(), d) == window_.end()) {
    window_.push_back(d);
  }
}

BulkProof EvidenceAggregator::issue_bulk_proof() const {
  BulkProof bp;
  bp.window_id = next_window_;
  bp.covered = window_;
  bp.sig = sign(bp.signed_payload(), key_.priv);
  return bp;
}

std::optional<AnchorBatch> EvidenceAggregator::anchor(AnchorContract& contract,
                                                      std::uint64_t block_no,
                                                      const std::vector<Digest>& omit) {
  std::vector<Digest> leaves;
  for (const Digest& d : window_) {
    if (std::find(omit.begin(), omit.end(), d) == omit.end()) {
      leaves.push_back(d);
    }
  }
  if (leaves.empty()) {
    return std::nullopt;
  }
  AnchorBatch batch;
  batch.window_id = next_window_;
  batch.root = merkle_root(leaves);
  batch.block_no = block_no;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    batch.proofs.emplace(leaves[i], merkle_prove(leaves, i));
  }
  contract.store(batch.root, block_no);
  window_.clear();
  ++next_window_;
  return batch;
}

ReconfirmResult reconfirm_bulk(const BulkProof& bp, const AnchorBatch& batch,
                               const AnchorContract& contract) {
  ReconfirmResult res;
  if (!contract.is_stored(batch.root)) {
    res.missing = bp.covered;
    return res;
  }
  for (const Digest& d : bp.covered) {
    const auto it = batch.proofs.find(d);
    if (it == batch.proofs.end() || !merkle_verify(d, it->second, batch.root)) {
      res.missing.push_back(d);
    }
  }
  res.ok = res.missing.empty();
  return res;
}

}  // namespace evichain
