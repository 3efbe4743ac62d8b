#include "evichain/verifier.hpp"

#include <algorithm>
#include <map>

namespace evichain {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::authentic: return "authentic";
    case Outcome::service_fault: return "service_fault";
    case Outcome::evidence_fault: return "evidence_fault";
    case Outcome::invalid_term: return "invalid_term";
    case Outcome::unproven: return "unproven";
  }
  return "unknown";
}

const char* to_string(Finding f) {
  switch (f) {
    case Finding::cert_window: return "cert_window";
    case Finding::sig_fail: return "sig_fail";
    case Finding::key_unobtainable: return "key_unobtainable";
    case Finding::no_evidence: return "no_evidence";
    case Finding::key_mismatch: return "key_mismatch";
    case Finding::readout_missing: return "readout_missing";
    case Finding::bct_mismatch: return "bct_mismatch";
    case Finding::poe_fail: return "poe_fail";
    case Finding::evidence_withheld: return "evidence_withheld";
    case Finding::node_unreachable: return "node_unreachable";
    case Finding::quorum_divergence: return "quorum_divergence";
    case Finding::location_unverified: return "location_unverified";
  }
  return "unknown";
}

namespace {

constexpr Outcome kAllOutcomes[] = {Outcome::authentic, Outcome::service_fault,
                                    Outcome::evidence_fault, Outcome::invalid_term,
                                    Outcome::unproven};

constexpr Finding kAllFindings[] = {
    Finding::cert_window,       Finding::sig_fail,        Finding::key_unobtainable,
    Finding::no_evidence,       Finding::key_mismatch,    Finding::readout_missing,
    Finding::bct_mismatch,      Finding::poe_fail,        Finding::evidence_withheld,
    Finding::node_unreachable,  Finding::quorum_divergence, Finding::location_unverified};

Finding finding_of(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::key_unobtainable: return Finding::key_unobtainable;
    case InvalidReason::cert_window: return Finding::cert_window;
    case InvalidReason::sig_fail: return Finding::sig_fail;
  }
  return Finding::sig_fail;
}

bool is_invalid_class(Finding f) {
  return f == Finding::cert_window || f == Finding::sig_fail || f == Finding::key_unobtainable;
}

bool is_service_class(Finding f) {
  return f == Finding::no_evidence || f == Finding::key_mismatch ||
         f == Finding::readout_missing || f == Finding::bct_mismatch;
}

bool is_evidence_class(Finding f) {
  return f == Finding::poe_fail || f == Finding::evidence_withheld ||
         f == Finding::node_unreachable || f == Finding::quorum_divergence;
}

void add_unique(std::vector<Finding>& fs, Finding f) {
  if (std::find(fs.begin(), fs.end(), f) == fs.end()) {
    fs.push_back(f);
  }
}

std::uint64_t tick_gap(Timestamp a, Timestamp b) { return a > b ? a - b : b - a; }

}  // namespace

Outcome outcome_from_string(const std::string& s) {
  for (const Outcome o : kAllOutcomes) {
    if (s == to_string(o)) {
      return o;
    }
  }
  throw ConfigError("unknown outcome: " + s);
}

Finding finding_from_string(const std::string& s) {
  for (const Finding f : kAllFindings) {
    if (s == to_string(f)) {
      return f;
    }
  }
  throw ConfigError("unknown finding: " + s);
}

bool Verdict::has(Finding f) const {
  return std::find(findings.begin(), findings.end(), f) != findings.end();
}

ChainView::ChainView(std::vector<const ChainNode*> nodes, const PkiStub* pki, SimParams params,
                     std::string client_name, ChainObserver observer)
    : nodes_(std::move(nodes)),
      pki_(pki),
      params_(params),
      client_name_(std::move(client_name)),
      observer_(std::move(observer)) {
  if (nodes_.empty() || !pki_) {
    throw ConfigError("chain view needs nodes and a pki");
  }
}

std::size_t ChainView::quorum_threshold() const {
  const std::size_t n = nodes_.size();
  return std::max(n / 2 + 1, std::min<std::size_t>(3, n));
}

void ChainView::record(const std::string& to, const std::string& kind, Bytes payload) const {
  if (observer_) {
    observer_(ChainMessage{client_name_, to, kind, std::move(payload)});
  }
}

ChainView::EvidenceQuorum ChainView::evidence_quorum(const Digest& search_key) const {
  // Keyed by (bct, term digest) so the agreed records come out in bct order.
  std::map<std::pair<Timestamp, Digest>, std::pair<EvidenceRecord, std::set<int>>> tally;
  std::set<int> responders;
  for (const ChainNode* node : nodes_) {
    const std::string addr = "node:" + std::to_string(node->id());
    record(addr, "query-evidence", Encoder().digest(FieldTag::digest, search_key).take());
    const auto r = node->query_evidence(search_key);
    if (!r.responded) {
      continue;
    }
    responders.insert(node->id());
    Encoder reply;
    for (const EvidenceRecord& rec : r.value) {
      reply.raw(FieldTag::evidence_term, rec.ev.encoded());
      reply.u64(FieldTag::created_at, rec.bct);
      auto& slot = tally[{rec.bct, evidence_digest(rec.ev)}];
      slot.first = rec;
      slot.second.insert(node->id());
    }
    if (observer_) {
      observer_(ChainMessage{addr, client_name_, "evidence-records", reply.take()});
    }
  }
  EvidenceQuorum out;
  out.reachable = responders.size() >= quorum_threshold();
  if (!out.reachable) {
    return out;
  }
  for (const auto& [key, slot] : tally) {
    if (slot.second.size() >= quorum_threshold()) {
      out.records.push_back(slot.first);
      for (const int id : responders) {
        if (slot.second.count(id) == 0) {
          divergents_.insert(id);
        }
      }
    } else {
      for (const int id : slot.second) {
        divergents_.insert(id);
      }
    }
  }
  return out;
}

ChainView::CertificateQuorum ChainView::certificate_quorum(const Digest& reader_kd) const {
  using Key = std::optional<std::pair<Digest, Timestamp>>;
  std::map<Key, std::set<int>> votes;
  std::map<Key, CertificateRecord> values;
  std::set<int> responders;
  for (const ChainNode* node : nodes_) {
    const std::string addr = "node:" + std::to_string(node->id());
    record(addr, "query-certificate", Encoder().digest(FieldTag::key_digest, reader_kd).take());
    const auto r = node->query_certificate(reader_kd);
    if (!r.responded) {
      continue;
    }
    responders.insert(node->id());
    Key key;
    Encoder reply;
    if (r.value) {
      key = std::make_pair(certificate_digest(r.value->cert), r.value->bct);
      values.emplace(key, *r.value);
      reply.raw(FieldTag::certificate_term, r.value->cert.encoded());
      reply.u64(FieldTag::created_at, r.value->bct);
    }
    votes[key].insert(node->id());
    if (observer_) {
      observer_(ChainMessage{addr, client_name_, "certificate-record", reply.take()});
    }
  }
  CertificateQuorum out;
  if (responders.size() < quorum_threshold()) {
    return out;
  }
  const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.second.size() < b.second.size();
  });
  if (best == votes.end() || best->second.size() < quorum_threshold()) {
    return out;  // no trustworthy agreement
  }
  out.reachable = true;
  if (best->first) {
    out.record = values.at(best->first);
  }
  for (const int id : responders) {
    if (best->second.count(id) == 0) {
      divergents_.insert(id);
    }
  }
  return out;
}

ChainView::BctQuorum ChainView::bct_quorum(const Digest& term_digest) const {
  std::map<std::optional<Timestamp>, std::set<int>> votes;
  std::set<int> responders;
  for (const ChainNode* node : nodes_) {
    const std::string addr = "node:" + std::to_string(node->id());
    record(addr, "query-bct", Encoder().digest(FieldTag::digest, term_digest).take());
    const auto r = node->bct_of(term_digest);
    if (!r.responded) {
      continue;
    }
    responders.insert(node->id());
    votes[r.value].insert(node->id());
    Encoder reply;
    if (r.value) {
      reply.u64(FieldTag::created_at, *r.value);
    }
    if (observer_) {
      observer_(ChainMessage{addr, client_name_, "bct", reply.take()});
    }
  }
  BctQuorum out;
  if (responders.size() < quorum_threshold()) {
    return out;
  }
  const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.second.size() < b.second.size();
  });
  if (best == votes.end() || best->second.size() < quorum_threshold()) {
    return out;
  }
  out.reachable = true;
  out.bct = best->first;
  for (const int id : responders) {
    if (best->second.count(id) == 0) {
      divergents_.insert(id);
    }
  }
  return out;
}

ChainView::RootQuorum ChainView::root_quorum(Timestamp bct) const {
  std::map<std::optional<Digest>, std::set<int>> votes;
  std::set<int> responders;
  for (const ChainNode* node : nodes_) {
    const std::string addr = "node:" + std::to_string(node->id());
    record(addr, "query-root", Encoder().u64(FieldTag::created_at, bct).take());
    const auto r = node->root_at(bct);
    if (!r.responded) {
      continue;
    }
    responders.insert(node->id());
    votes[r.value].insert(node->id());
    Encoder reply;
    if (r.value) {
      reply.digest(FieldTag::merkle_root, *r.value);
    }
    if (observer_) {
      observer_(ChainMessage{addr, client_name_, "root", reply.take()});
    }
  }
  RootQuorum out;
  if (responders.size() < quorum_threshold()) {
    return out;
  }
  const auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
    return a.second.size() < b.second.size();
  });
  if (best == votes.end() || best->second.size() < quorum_threshold()) {
    return out;
  }
  out.reachable = true;
  out.root = best->first;
  for (const int id : responders) {
    if (best->second.count(id) == 0) {
      divergents_.insert(id);
    }
  }
  return out;
}

std::optional<ProofBundle> ChainView::verified_proof(const Digest& term_digest,
                                                     Timestamp bct) const {
  const RootQuorum rq = root_quorum(bct);
  if (!rq.reachable || !rq.root) {
    return std::nullopt;
  }
  for (const ChainNode* node : nodes_) {
    const std::string addr = "node:" + std::to_string(node->id());
    record(addr, "query-proof",
           Encoder().digest(FieldTag::digest, term_digest).u64(FieldTag::created_at, bct).take());
    const auto r = node->prove_existence(term_digest, bct);
    if (!r.responded || !r.value) {
      continue;
    }
    if (observer_) {
      observer_(ChainMessage{addr, client_name_, "proof", r.value->proof.encoded()});
    }
    // The proof must fold up to the root the quorum agreed on; the node's
    // own claimed root is not trusted.
    if (merkle_verify(term_digest, r.value->proof, *rq.root)) {
      return ProofBundle{*rq.root, r.value->proof};
    }
    divergents_.insert(node->id());
  }
  return std::nullopt;
}

KeyResolver ChainView::chain_cert_resolver() const {
  return [this](const Digest& kd) -> std::vector<CertWindow> {
    const CertificateQuorum cq = certificate_quorum(kd);
    if (!cq.reachable || !cq.record) {
      return {};
    }
    const Certificate& cert = cq.record->cert;
    if (validate_certificate(cert, *pki_).has_value()) {
      return {};  // anchored but not actually a valid credential
    }
    return {CertWindow{cert.reader_public, cert.valid_from, cert.valid_until}};
  };
}

namespace {

Outcome classify(bool unreachable, const std::vector<Finding>& findings, bool service_answerable) {
  if (unreachable) {
    return Outcome::unproven;
  }
  if (service_answerable) {
    for (const Finding f : findings) {
      if (is_invalid_class(f) || is_service_class(f) || is_evidence_class(f)) {
        return Outcome::service_fault;
      }
    }
    return Outcome::authentic;
  }
  for (const Finding f : findings) {
    if (is_invalid_class(f)) {
      return Outcome::invalid_term;
    }
  }
  for (const Finding f : findings) {
    if (is_service_class(f)) {
      return Outcome::service_fault;
    }
  }
  for (const Finding f : findings) {
    if (is_evidence_class(f)) {
      return Outcome::evidence_fault;
    }
  }
  return Outcome::authentic;
}

}  // namespace

Verdict verify_readout(const Readout& ro, const Digest& expected_search_key,
                       const ChainView& view) {
  Verdict v;
  bool unreachable = false;
  const Digest sk = readout_search_key(ro.nonce, ro.tag_id);
  const Digest cd = readout_content_digest(ro.time, ro.location, ro.data);
  if (sk != expected_search_key) {
    add_unique(v.findings, Finding::key_mismatch);
  }

  const auto certq = view.certificate_quorum(ro.key_digest);
  if (!certq.reachable) {
    unreachable = true;
  } else {
    const auto reason = validate_readout(ro, view.chain_cert_resolver());
    if (reason) {
      add_unique(v.findings, finding_of(*reason));
    }
  }

  const auto evq = view.evidence_quorum(sk);
  if (!evq.reachable) {
    unreachable = true;
  } else {
    const EvidenceRecord* match = nullptr;
    for (const EvidenceRecord& rec : evq.records) {
      if (rec.ev.search_key == sk && rec.ev.content_digest == cd && rec.ev.sig == ro.sig &&
          rec.ev.key_digest == ro.key_digest) {
        match = &rec;
        break;
      }
    }
    if (!match) {
      add_unique(v.findings, Finding::no_evidence);
    } else {
      const Digest d = term_digest(Term{match->ev});
      if (!view.verified_proof(d, match->bct)) {
        add_unique(v.findings, Finding::poe_fail);
      }
      if (tick_gap(match->bct, ro.time) > view.params().bct_tolerance()) {
        add_unique(v.findings, Finding::bct_mismatch);
      }
    }
  }

  add_unique(v.findings, Finding::location_unverified);
  v.outcome = classify(unreachable, v.findings, false);
  return v;
}

Verdict verify_service_answer(const Digest& expected_search_key, std::span<const Readout> answer,
                              const ChainView& view) {
  Verdict v;
  bool unreachable = false;

  for (const Readout& ro : answer) {
    const Verdict sub = verify_readout(ro, expected_search_key, view);
    if (sub.outcome == Outcome::unproven) {
      unreachable = true;
    }
    for (const Finding f : sub.findings) {
      add_unique(v.findings, f);
    }
  }

  const auto evq = view.evidence_quorum(expected_search_key);
  if (!evq.reachable) {
    unreachable = true;
  } else {
    for (const EvidenceRecord& rec : evq.records) {
      bool covered = false;
      for (const Readout& ro : answer) {
        if (evidence_of(ro) == rec.ev) {
          covered = true;
          break;
        }
      }
      if (!covered) {
        add_unique(v.findings, Finding::readout_missing);
      }
    }
  }

  v.outcome = classify(unreachable, v.findings, true);
  return v;
}

std::vector<NodeVerdict> audit_evidence_service(const Digest& search_key,
                                                std::span<const EvidenceRecord> expected,
                                                const ChainView& view) {
  std::vector<NodeVerdict> out;
  for (const ChainNode* node : view.nodes()) {
    NodeVerdict nv;
    nv.node_id = node->id();
    const auto r = node->query_evidence(search_key);
    if (!r.responded) {
      nv.verdict.findings.push_back(Finding::node_unreachable);
      nv.verdict.outcome = Outcome::evidence_fault;
      out.push_back(std::move(nv));
      continue;
    }
    for (const EvidenceRecord& exp : expected) {
      if (std::find(r.value.begin(), r.value.end(), exp) == r.value.end()) {
        add_unique(nv.verdict.findings, Finding::evidence_withheld);
      }
    }
    for (const EvidenceRecord& got : r.value) {
      if (std::find(expected.begin(), expected.end(), got) != expected.end()) {
        continue;
      }
      if (got.ev.search_key != search_key) {
        add_unique(nv.verdict.findings, Finding::key_mismatch);
        continue;
      }
      // An extra record only stands if this node can prove it against the
      // root the quorum agrees on.
      const Digest d = term_digest(Term{got.ev});
      const auto rq = view.root_quorum(got.bct);
      const auto pr = node->prove_existence(d, got.bct);
      const bool proven = rq.reachable && rq.root && pr.responded && pr.value &&
                          merkle_verify(d, pr.value->proof, *rq.root);
      add_unique(nv.verdict.findings, proven ? Finding::quorum_divergence : Finding::poe_fail);
    }
    nv.verdict.outcome =
        nv.verdict.findings.empty() ? Outcome::authentic : Outcome::evidence_fault;
    out.push_back(std::move(nv));
  }
  return out;
}

TimeCheck check_elapsed_time(const Term& term, Timestamp claimed, Timestamp now,
                             const ChainView& view) {
  if (!time_apart(claimed, now, view.params().time)) {
    throw ParameterError("elapsed-time check needs claimed and now well apart");
  }
  const Digest d = term_digest(term);
  const auto bq = view.bct_quorum(d);
  if (!bq.reachable) {
    return TimeCheck::unproven;
  }
  if (!bq.bct) {
    return TimeCheck::refuted;
  }
  if (tick_gap(*bq.bct, claimed) > view.params().bct_tolerance()) {
    return TimeCheck::refuted;
  }
  return view.verified_proof(d, *bq.bct) ? TimeCheck::upheld : TimeCheck::refuted;
}

AlibiCheck check_alibi_term(const Term& term, Timestamp claimed, Timestamp now,
                            const ChainView& view) {
  if (!time_apart(claimed, now, view.params().time)) {
    throw ParameterError("alibi check needs claimed and now well apart");
  }
  const Digest d = term_digest(term);
  const auto bq = view.bct_quorum(d);
  if (!bq.reachable) {
    return AlibiCheck::unproven;
  }
  if (!bq.bct) {
    return AlibiCheck::fabrication_detected;
  }
  if (tick_gap(*bq.bct, claimed) > view.params().bct_tolerance()) {
    return AlibiCheck::fabrication_detected;
  }
  return view.verified_proof(d, *bq.bct) ? AlibiCheck::consistent
                                         : AlibiCheck::fabrication_detected;
}

AlibiCheck check_alibi_readout(const Readout& ro, Timestamp claimed, Timestamp now,
                               const ChainView& view) {
  if (!time_apart(claimed, now, view.params().time)) {
    throw ParameterError("alibi check needs claimed and now well apart");
  }
  const Digest sk = readout_search_key(ro.nonce, ro.tag_id);
  const Digest cd = readout_content_digest(ro.time, ro.location, ro.data);
  const auto evq = view.evidence_quorum(sk);
  if (!evq.reachable) {
    return AlibiCheck::unproven;
  }
  for (const EvidenceRecord& rec : evq.records) {
    if (rec.ev.content_digest != cd || rec.ev.sig != ro.sig || rec.ev.key_digest != ro.key_digest) {
      continue;
    }
    if (tick_gap(rec.bct, claimed) <= view.params().bct_tolerance() &&
        view.verified_proof(term_digest(Term{rec.ev}), rec.bct)) {
      return AlibiCheck::consistent;
    }
  }
  // Either no matching evidence was ever anchored, or everything matching
  // was anchored at the wrong time.
  return AlibiCheck::fabrication_detected;
}

}  // namespace evichain
