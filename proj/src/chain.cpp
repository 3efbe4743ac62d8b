#include "evichain/chain.hpp"

#include <algorithm>

namespace evichain {

Bytes encode_term(const Term& term) {
  Encoder enc;
  if (const auto* ev = std::get_if<Evidence>(&term)) {
    enc.raw(FieldTag::evidence_term, ev->encoded());
  } else {
    enc.raw(FieldTag::certificate_term, std::get<Certificate>(term).encoded());
  }
  return enc.take();
}

Term decode_term(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = decode(bytes);
  if (fields.size() != 1) {
    throw EncodingError("term must be a single wrapped field");
  }
  if (fields[0].tag == FieldTag::evidence_term) {
    return Evidence::decode(fields[0].payload);
  }
  if (fields[0].tag == FieldTag::certificate_term) {
    return Certificate::decode(fields[0].payload);
  }
  throw EncodingError("unknown term wrapper");
}

Digest term_digest(const Term& term) { return hash(encode_term(term)); }

std::optional<InvalidReason> check_signed_term(std::span<const std::uint8_t> payload,
                                               const Signature& sig, const Digest& signer_digest,
                                               std::span<const Timestamp> embedded_times,
                                               const KeyResolver& resolve) {
  const std::vector<CertWindow> candidates = resolve(signer_digest);
  if (candidates.empty()) {
    return InvalidReason::key_unobtainable;
  }
  std::optional<InvalidReason> first_failure;
  for (const CertWindow& cw : candidates) {
    std::optional<InvalidReason> failure;
    for (const Timestamp t : embedded_times) {
      if (t < cw.valid_from || cw.valid_until < t) {
        failure = InvalidReason::cert_window;
        break;
      }
    }
    if (!failure && !verify(payload, sig, cw.key)) {
      failure = InvalidReason::sig_fail;
    }
    if (!failure) {
      return std::nullopt;
    }
    if (!first_failure) {
      first_failure = failure;
    }
  }
  return first_failure;
}

std::optional<InvalidReason> validate_evidence(const Evidence& ev, const KeyResolver& resolve) {
  // No timestamp lives inside an evidence, so only key availability and the
  // signature are decidable here. That is what lets evidences outlive their
  // certificate windows.
  return check_signed_term(signed_payload(ev.search_key, ev.content_digest), ev.sig,
                           ev.key_digest, {}, resolve);
}

std::optional<InvalidReason> validate_readout(const Readout& ro, const KeyResolver& resolve) {
  const Digest sk = readout_search_key(ro.nonce, ro.tag_id);
  const Digest cd = readout_content_digest(ro.time, ro.location, ro.data);
  const Timestamp times[] = {ro.time};
  return check_signed_term(signed_payload(sk, cd), ro.sig, ro.key_digest, times, resolve);
}

std::optional<InvalidReason> validate_certificate(const Certificate& cert, const PkiStub& pki) {
  const Timestamp times[] = {cert.valid_from, cert.valid_until};
  return check_signed_term(
      certificate_signed_payload(cert.reader_public, cert.valid_from, cert.valid_until), cert.sig,
      cert.vendor_key_digest, times, pki_resolver(pki));
}

KeyResolver pki_resolver(const PkiStub& pki) {
  return [&pki](const Digest& digest) -> std::vector<CertWindow> {
    const PkiEntry* entry = pki.find(digest);
    if (!entry) {
      return {};
    }
    return {CertWindow{entry->key, entry->valid_from, entry->valid_until}};
  };
}

Bytes Block::encoded() const {
  Encoder enc;
  enc.u64(FieldTag::block_height, height);
  enc.digest(FieldTag::prev_digest, prev_digest);
  enc.u64(FieldTag::created_at, created_at);
  enc.digest(FieldTag::merkle_root, merkle_root);
  for (const Term& term : terms) {
    if (const auto* ev = std::get_if<Evidence>(&term)) {
      enc.raw(FieldTag::evidence_term, ev->encoded());
    } else {
      enc.raw(FieldTag::certificate_term, std::get<Certificate>(term).encoded());
    }
  }
  return enc.take();
}

Block Block::decode(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = evichain::decode(bytes);
  if (fields.size() < 4 || fields[0].tag != FieldTag::block_height ||
      fields[1].tag != FieldTag::prev_digest || fields[2].tag != FieldTag::created_at ||
      fields[3].tag != FieldTag::merkle_root) {
    throw EncodingError("malformed block header");
  }
  Block b;
  b.height = decode_u64(fields[0]);
  b.prev_digest = decode_digest(fields[1]);
  b.created_at = decode_u64(fields[2]);
  b.merkle_root = decode_digest(fields[3]);
  for (std::size_t i = 4; i < fields.size(); ++i) {
    if (fields[i].tag == FieldTag::evidence_term) {
      b.terms.emplace_back(Evidence::decode(fields[i].payload));
    } else if (fields[i].tag == FieldTag::certificate_term) {
      b.terms.emplace_back(Certificate::decode(fields[i].payload));
    } else {
      throw EncodingError("unexpected field in block body");
    }
  }
  return b;
}

Digest block_digest(const Block& b) { return hash(b.encoded()); }

Digest block_terms_root(std::span<const Term> terms) {
  std::vector<Digest> leaves;
  leaves.reserve(terms.size());
  for (const Term& term : terms) {
    leaves.push_back(term_digest(term));
  }
  return merkle_root(leaves);
}

bool verify_ledger(std::span<const Block> ledger) {
  Digest prev{};  // zero digest expected before genesis
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const Block& b = ledger[i];
    if (b.height != i || b.prev_digest != prev) {
      return false;
    }
    if (b.merkle_root != block_terms_root(b.terms)) {
      return false;
    }
    prev = block_digest(b);
  }
  return true;
}

bool verify_encoded_ledger(std::span<const Bytes> encoded_blocks, const Digest& expected_tip) {
  if (encoded_blocks.empty()) {
    return false;
  }
  Digest prev{};
  for (std::size_t i = 0; i < encoded_blocks.size(); ++i) {
    Block b;
    try {
      b = Block::decode(encoded_blocks[i]);
    } catch (const EncodingError&) {
      return false;
    }
    if (b.height != i || b.prev_digest != prev) {
      return false;
    }
    if (b.merkle_root != block_terms_root(b.terms)) {
      return false;
    }
    prev = hash(encoded_blocks[i]);
  }
  return prev == expected_tip;
}

ChainNode::ChainNode(int id, const PkiStub* pki, FaultMode mode)
    : id_(id), pki_(pki), fault_(mode) {}

std::vector<CertWindow> ChainNode::certificates_for(const Digest& kd) const {
  std::vector<CertWindow> out;
  const auto add_from = [&](const Digest& term_d) {
    const auto it = known_.find(term_d);
    if (it == known_.end()) {
      return;
    }
    const auto* cert = std::get_if<Certificate>(&it->second);
    if (cert) {
      out.push_back(CertWindow{cert->reader_public, cert->valid_from, cert->valid_until});
    }
  };
  // Confirmed certificates first, then any validated but unconfirmed ones.
  const auto conf = certificate_by_key_.find(kd);
  if (conf != certificate_by_key_.end()) {
    for (const Digest& d : conf->second) {
      add_from(d);
    }
  }
  for (const Digest& d : arrival_order_) {
    if (confirmed_.count(d) > 0) {
      continue;
    }
    const auto it = known_.find(d);
    if (it == known_.end()) {
      continue;
    }
    const auto* cert = std::get_if<Certificate>(&it->second);
    if (cert && cert->reader_key_digest() == kd) {
      out.push_back(CertWindow{cert->reader_public, cert->valid_from, cert->valid_until});
    }
  }
  return out;
}

bool ChainNode::term_valid_here(const Term& term,
                                const std::vector<const Certificate*>& extra_certs) const {
  if (const auto* cert = std::get_if<Certificate>(&term)) {
    return !validate_certificate(*cert, *pki_).has_value();
  }
  const auto& ev = std::get<Evidence>(term);
  const KeyResolver resolve = [&](const Digest& kd) {
    std::vector<CertWindow> candidates = certificates_for(kd);
    for (const Certificate* cert : extra_certs) {
      if (cert->reader_key_digest() == kd) {
        candidates.push_back(CertWindow{cert->reader_public, cert->valid_from, cert->valid_until});
      }
    }
    return candidates;
  };
  return !validate_evidence(ev, resolve).has_value();
}

ChainNode::Ingest ChainNode::ingest_term(const Term& term, bool mark_fresh) {
  const Digest d = term_digest(term);
  if (known_.count(d) > 0) {
    return Ingest::accepted;  // duplicate, no effect
  }
  if (!term_valid_here(term, {})) {
    return Ingest::forgotten;
  }
  known_.emplace(d, term);
  arrival_order_.push_back(d);
  if (mark_fresh) {
    fresh_.push_back(GossipItem{term});
  }
  return Ingest::accepted;
}

ChainNode::Ingest ChainNode::submit(const Term& term) { return ingest_term(term, true); }

const Term* ChainNode::find_term(const Digest& digest) const {
  const auto it = known_.find(digest);
  return it == known_.end() ? nullptr : &it->second;
}

void ChainNode::index_block(std::size_t height) {
  const Block& b = ledger_[height];
  block_index_[block_digest(b)] = height;
  block_by_time_[b.created_at] = height;
  for (const Term& term : b.terms) {
    const Digest d = term_digest(term);
    if (known_.count(d) == 0) {
      known_.emplace(d, term);
      arrival_order_.push_back(d);
    }
    if (confirmed_.count(d) > 0) {
      continue;  // bct is the first containing block's creation time
    }
    confirmed_[d] = b.created_at;
    if (const auto* ev = std::get_if<Evidence>(&term)) {
      evidence_by_key_[ev->search_key].push_back(d);
    } else {
      certificate_by_key_[std::get<Certificate>(term).reader_key_digest()].push_back(d);
    }
  }
}

bool ChainNode::try_append(const Block& block) {
  if (block.height != ledger_.size()) {
    return false;
  }
  const Digest expected_prev = ledger_.empty() ? Digest{} : block_digest(ledger_.back());
  if (block.prev_digest != expected_prev) {
    return false;
  }
  if (block.merkle_root != block_terms_root(block.terms)) {
    return false;
  }
  // One invalid subterm invalidates the whole block. Certificates become
  // visible to evidences appearing after them in the same block.
  std::vector<const Certificate*> in_block;
  for (const Term& term : block.terms) {
    if (!term_valid_here(term, in_block)) {
      return false;
    }
    if (const auto* cert = std::get_if<Certificate>(&term)) {
      in_block.push_back(cert);
    }
  }
  ledger_.push_back(block);
  index_block(ledger_.size() - 1);
  fresh_.push_back(GossipItem{block});
  return true;
}

bool ChainNode::receive_block(const Block& block) {
  const Digest d = block_digest(block);
  if (has_block(d)) {
    return false;
  }
  if (block.height > ledger_.size()) {
    holdback_[block.height] = block;
    block_index_.emplace(d, block.height);  // remembered, not yet appended
    return true;
  }
  if (!try_append(block)) {
    return false;
  }
  // An early-arrived successor may now fit.
  auto it = holdback_.find(ledger_.size());
  while (it != holdback_.end()) {
    const Block next = it->second;
    holdback_.erase(it);
    if (!try_append(next)) {
      block_index_.erase(block_digest(next));
      break;
    }
    it = holdback_.find(ledger_.size());
  }
  return true;
}

std::vector<GossipItem> ChainNode::take_fresh() {
  std::vector<GossipItem> items(fresh_.begin(), fresh_.end());
  fresh_.clear();
  if (fault_ == FaultMode::silent) {
    return {};  // receives but never forwards
  }
  return items;
}

std::vector<Digest> ChainNode::pending_terms() const {
  std::vector<Digest> out;
  for (const Digest& d : arrival_order_) {
    if (confirmed_.count(d) == 0) {
      out.push_back(d);
    }
  }
  return out;
}

Block ChainNode::produce_block(Timestamp now, std::uint64_t work_cost) {
  Block b;
  b.height = ledger_.size();
  b.prev_digest = ledger_.empty() ? Digest{} : block_digest(ledger_.back());
  b.created_at = now;
  for (const Digest& d : pending_terms()) {
    b.terms.push_back(known_.at(d));
  }
  b.merkle_root = block_terms_root(b.terms);
  b.work_cost = work_cost;
  work_spent_ += work_cost;
  if (!try_append(b)) {
    throw Error("producer failed to append its own block");
  }
  return b;
}

RpcResult<std::vector<EvidenceRecord>> ChainNode::query_evidence(const Digest& search_key) const {
  if (fault_ == FaultMode::silent) {
    return {};
  }
  RpcResult<std::vector<EvidenceRecord>> res;
  res.responded = true;
  if (!(fault_ == FaultMode::lying && lies_.withhold_evidence)) {
    const auto it = evidence_by_key_.find(search_key);
    if (it != evidence_by_key_.end()) {
      for (const Digest& d : it->second) {
        res.value.push_back(
            EvidenceRecord{std::get<Evidence>(known_.at(d)), confirmed_.at(d)});
      }
    }
  }
  if (fault_ == FaultMode::lying) {
    const auto fab = lies_.fabricated.find(search_key);
    if (fab != lies_.fabricated.end()) {
      res.value.insert(res.value.end(), fab->second.begin(), fab->second.end());
    }
  }
  return res;
}

RpcResult<std::optional<CertificateRecord>> ChainNode::query_certificate(
    const Digest& reader_kd) const {
  if (fault_ == FaultMode::silent) {
    return {};
  }
  RpcResult<std::optional<CertificateRecord>> res;
  res.responded = true;
  const auto it = certificate_by_key_.find(reader_kd);
  if (it != certificate_by_key_.end() && !it->second.empty()) {
    const Digest& d = it->second.front();
    res.value = CertificateRecord{std::get<Certificate>(known_.at(d)), confirmed_.at(d)};
  }
  return res;
}

RpcResult<std::optional<Timestamp>> ChainNode::bct_of(const Digest& digest) const {
  if (fault_ == FaultMode::silent) {
    return {};
  }
  RpcResult<std::optional<Timestamp>> res;
  res.responded = true;
  const auto it = confirmed_.find(digest);
  if (it != confirmed_.end()) {
    res.value = it->second;
  }
  return res;
}

RpcResult<std::optional<Digest>> ChainNode::root_at(Timestamp bct) const {
  if (fault_ == FaultMode::silent) {
    return {};
  }
  RpcResult<std::optional<Digest>> res;
  res.responded = true;
  const auto it = block_by_time_.find(bct);
  if (it != block_by_time_.end()) {
    res.value = ledger_[it->second].merkle_root;
  }
  return res;
}

RpcResult<std::optional<ProofBundle>> ChainNode::prove_existence(const Digest& digest,
                                                                 Timestamp bct) const {
  if (fault_ == FaultMode::silent) {
    return {};
  }
  RpcResult<std::optional<ProofBundle>> res;
  res.responded = true;
  if (fault_ == FaultMode::lying && lies_.garbage_proofs) {
    Encoder enc;
    enc.digest(FieldTag::digest, digest);
    enc.u64(FieldTag::window_id, 0);
    const Digest junk = hash(enc.take());
    ProofBundle bundle;
    bundle.root = junk;
    bundle.proof.leaf_index = 0;
    bundle.proof.steps.push_back(ProofStep{true, junk});
    res.value = bundle;
    return res;
  }
  const auto at = block_by_time_.find(bct);
  if (at == block_by_time_.end()) {
    return res;
  }
  const Block& b = ledger_[at->second];
  std::vector<Digest> leaves;
  leaves.reserve(b.terms.size());
  std::optional<std::size_t> index;
  for (std::size_t i = 0; i < b.terms.size(); ++i) {
    leaves.push_back(term_digest(b.terms[i]));
    if (leaves.back() == digest) {
      index = i;
    }
  }
  if (!index) {
    return res;  // answered: not contained in that block
  }
  res.value = ProofBundle{b.merkle_root, merkle_prove(leaves, *index)};
  return res;
}

void ChainNode::rebuild_indexes() {
  block_index_.clear();
  block_by_time_.clear();
  confirmed_.clear();
  evidence_by_key_.clear();
  certificate_by_key_.clear();
  for (std::size_t h = 0; h < ledger_.size(); ++h) {
    index_block(h);
  }
}

std::size_t ChainNode::rewrite_without_term(const Digest& digest,
                                            std::uint64_t work_cost_per_block) {
  const auto it = confirmed_.find(digest);
  if (it == confirmed_.end()) {
    return 0;
  }
  const std::size_t height = block_by_time_.at(it->second);
  Block& target = ledger_[height];
  std::erase_if(target.terms, [&](const Term& t) { return term_digest(t) == digest; });
  target.merkle_root = block_terms_root(target.terms);
  // Every block from the edit to the tip must be re-produced: the hash
  // links force the whole suffix to be re-mined, which is exactly what
  // makes deletion expensive.
  std::size_t remined = 1;
  work_spent_ += work_cost_per_block;
  for (std::size_t h = height + 1; h < ledger_.size(); ++h) {
    ledger_[h].prev_digest = block_digest(ledger_[h - 1]);
    work_spent_ += work_cost_per_block;
    ++remined;
  }
  rebuild_indexes();
  known_.erase(digest);
  std::erase(arrival_order_, digest);
  return remined;
}

ChainNetwork::ChainNetwork(std::size_t node_count, const PkiStub* pki, SimParams params)
    : params_(params) {
  params_.validate();
  if (node_count == 0) {
    throw ParameterError("chain needs at least one node");
  }
  nodes_.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    nodes_.emplace_back(static_cast<int>(i), pki);
  }
  neighbours_.resize(node_count);
  connect_all();
}

void ChainNetwork::connect_all() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    neighbours_[i].clear();
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != i) {
        neighbours_[i].push_back(j);
      }
    }
  }
}

void ChainNetwork::connect_ring() {
  for (auto& n : neighbours_) {
    n.clear();
  }
  if (nodes_.size() < 2) {
    return;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const std::size_t next = (i + 1) % nodes_.size();
    neighbours_[i].push_back(next);
    neighbours_[next].push_back(i);
  }
}

void ChainNetwork::connect(std::size_t a, std::size_t b) {
  if (a >= nodes_.size() || b >= nodes_.size() || a == b) {
    throw ParameterError("bad edge");
  }
  if (std::find(neighbours_[a].begin(), neighbours_[a].end(), b) == neighbours_[a].end()) {
    neighbours_[a].push_back(b);
    neighbours_[b].push_back(a);
  }
}

ChainNode::Ingest ChainNetwork::submit(std::size_t node_id, const Term& term) {
  return nodes_.at(node_id).submit(term);
}

std::size_t ChainNetwork::gossip_round() {
  // Snapshot first: items received during this round stay fresh and are
  // forwarded next round, so a round is exactly one hop.
  std::vector<std::vector<GossipItem>> outgoing;
  outgoing.reserve(nodes_.size());
  for (ChainNode& n : nodes_) {
    outgoing.push_back(n.take_fresh());
  }
  std::size_t sent = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const GossipItem& item : outgoing[i]) {
      for (const std::size_t j : neighbours_[i]) {
        if (const auto* term = std::get_if<Term>(&item)) {
          const Digest d = term_digest(*term);
          if (nodes_[j].knows_term(d)) {
            continue;
          }
          if (observer_) {
            observer_(ChainMessage{"node:" + std::to_string(i), "node:" + std::to_string(j),
                                   "term", encode_term(*term)});
          }
          nodes_[j].submit(*term);
          ++sent;
        } else {
          const Block& block = std::get<Block>(item);
          if (nodes_[j].has_block(block_digest(block))) {
            continue;
          }
          if (observer_) {
            observer_(ChainMessage{"node:" + std::to_string(i), "node:" + std::to_string(j),
                                   "block", block.encoded()});
          }
          nodes_[j].receive_block(block);
          ++sent;
        }
      }
    }
  }
  return sent;
}

std::optional<Block> ChainNetwork::on_tick(Timestamp now) {
  if (now == 0 || now % params_.block_interval != 0) {
    return std::nullopt;
  }
  return nodes_.at(static_cast<std::size_t>(producer_))
      .produce_block(now, params_.work_cost_per_block);
}

bool ChainNetwork::quiesced() const {
  for (const ChainNode& n : nodes_) {
    if (!n.idle()) {
      return false;
    }
  }
  return true;
}

std::vector<const ChainNode*> ChainNetwork::all_nodes() const {
  std::vector<const ChainNode*> out;
  out.reserve(nodes_.size());
  for (const ChainNode& n : nodes_) {
    out.push_back(&n);
  }
  return out;
}

}  // namespace evichain
