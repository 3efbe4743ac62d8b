#include <doctest.h>

#include <algorithm>
#include <tuple>

#include "evichain/verifier.hpp"

using namespace evichain;

namespace {

// Three honest replicas holding one confirmed observation: certificate and
// evidence in the block created at t=105, observation claimed at t=95.
struct Net {
  SimParams params{};
  PkiStub pki;
  Vendor vendor{"vendor-1", generate_keypair(100)};
  KeyPair reader_kp = generate_keypair(1);
  Certificate cert;
  ChainNetwork net;
  RandomNumber nonce{};
  TagId tag{};
  Readout ro;
  Evidence ev;
  Digest sk;

  explicit Net(std::size_t n = 3) : net(n, &pki, params) {
    pki.add(PkiEntry{vendor.public_key(), 0, 100000});
    cert = vendor.make_certificate(reader_kp.pub, 10, 50000);
    nonce.fill(5);
    tag.fill(6);
    std::tie(ro, ev) = forge_observation(nonce, tag, 95, "dock", to_bytes("cargo"),
                                         reader_kp.priv, key_digest(reader_kp.pub));
    sk = ev.search_key;
    net.submit(0, Term{cert});
    net.submit(0, Term{ev});
    net.on_tick(105);
    while (net.gossip_round() > 0) {
    }
  }

  ChainView view() const { return ChainView(net.all_nodes(), &pki, params); }
};

}  // namespace

TEST_CASE("outcome and finding names round trip") {
  for (const Outcome o : {Outcome::authentic, Outcome::service_fault, Outcome::evidence_fault,
                          Outcome::invalid_term, Outcome::unproven}) {
    CHECK(outcome_from_string(to_string(o)) == o);
  }
  for (const Finding f :
       {Finding::cert_window, Finding::sig_fail, Finding::key_unobtainable, Finding::no_evidence,
        Finding::key_mismatch, Finding::readout_missing, Finding::bct_mismatch, Finding::poe_fail,
        Finding::evidence_withheld, Finding::node_unreachable, Finding::quorum_divergence,
        Finding::location_unverified}) {
    CHECK(finding_from_string(to_string(f)) == f);
  }
  CHECK_THROWS_AS(outcome_from_string("gibberish"), ConfigError);
  CHECK_THROWS_AS(finding_from_string("gibberish"), ConfigError);
}

TEST_CASE("quorum threshold is three, or a majority past five") {
  PkiStub pki;
  std::vector<ChainNode> nodes;
  for (int i = 0; i < 7; ++i) {
    nodes.emplace_back(i, &pki);
  }
  const auto threshold = [&](std::size_t n) {
    std::vector<const ChainNode*> ptrs;
    for (std::size_t i = 0; i < n; ++i) {
      ptrs.push_back(&nodes[i]);
    }
    return ChainView(ptrs, &pki, SimParams{}).quorum_threshold();
  };
  CHECK(threshold(1) == 1);
  CHECK(threshold(2) == 2);
  CHECK(threshold(3) == 3);
  CHECK(threshold(4) == 3);
  CHECK(threshold(5) == 3);
  CHECK(threshold(6) == 4);
  CHECK(threshold(7) == 4);
  CHECK_THROWS_AS(ChainView({}, &pki, SimParams{}), ConfigError);
}

TEST_CASE("a genuine readout verifies as authentic") {
  Net fix;
  const ChainView view = fix.view();
  const Verdict v = verify_readout(fix.ro, fix.sk, view);
  CHECK(v.outcome == Outcome::authentic);
  CHECK(v.has(Finding::location_unverified));  // locations stay claims
  CHECK(v.findings.size() == 1);
  CHECK(view.divergent_nodes().empty());
}

TEST_CASE("a readout for the wrong shipment is flagged") {
  Net fix;
  const Digest other = hash(to_bytes("some other shipment"));
  const Verdict v = verify_readout(fix.ro, other, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::key_mismatch));
}

TEST_CASE("tampered content breaks the signature and loses its evidence") {
  Net fix;
  Readout tampered = fix.ro;
  tampered.data.push_back(0xff);
  const Verdict v = verify_readout(tampered, fix.sk, fix.view());
  CHECK(v.outcome == Outcome::invalid_term);
  CHECK(v.has(Finding::sig_fail));
  CHECK(v.has(Finding::no_evidence));
}

TEST_CASE("a claimed time outside the certificate window is invalid") {
  Net fix;
  auto [ro, ev] = forge_observation(fix.nonce, fix.tag, 50001, "dock", to_bytes("cargo"),
                                    fix.reader_kp.priv, key_digest(fix.reader_kp.pub));
  const Verdict v = verify_readout(ro, ev.search_key, fix.view());
  CHECK(v.outcome == Outcome::invalid_term);
  CHECK(v.has(Finding::cert_window));
}

TEST_CASE("an unanchored readout has no evidence behind it") {
  Net fix;
  RandomNumber fresh{};
  fresh.fill(9);
  auto [ro, ev] = forge_observation(fresh, fix.tag, 95, "dock", to_bytes("cargo"),
                                    fix.reader_kp.priv, key_digest(fix.reader_kp.pub));
  const Verdict v = verify_readout(ro, ev.search_key, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::no_evidence));
  CHECK_FALSE(v.has(Finding::sig_fail));
}

TEST_CASE("a lying clock is caught by the block creation time") {
  Net fix;
  // Claims t=300 but the evidence lands in the t=120 block.
  RandomNumber n2{};
  n2.fill(7);
  auto [ro, ev] = forge_observation(n2, fix.tag, 300, "dock", to_bytes("cargo"),
                                    fix.reader_kp.priv, key_digest(fix.reader_kp.pub));
  fix.net.submit(0, Term{ev});
  fix.net.on_tick(120);
  while (fix.net.gossip_round() > 0) {
  }
  const Verdict v = verify_readout(ro, ev.search_key, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::bct_mismatch));
  CHECK_FALSE(v.has(Finding::no_evidence));
}

TEST_CASE("no quorum means no answer at all") {
  Net fix;
  fix.net.node(1).set_fault(FaultMode::silent);
  fix.net.node(2).set_fault(FaultMode::silent);
  const Verdict v = verify_readout(fix.ro, fix.sk, fix.view());
  CHECK(v.outcome == Outcome::unproven);
}

TEST_CASE("an honest service answer is authentic") {
  Net fix;
  const std::vector<Readout> answer{fix.ro};
  const Verdict v = verify_service_answer(fix.sk, answer, fix.view());
  CHECK(v.outcome == Outcome::authentic);
}

TEST_CASE("hiding a readout is the service's fault") {
  Net fix;
  const Verdict v = verify_service_answer(fix.sk, {}, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::readout_missing));
}

TEST_CASE("tampering with an answered readout is the service's fault") {
  Net fix;
  Readout tampered = fix.ro;
  tampered.time += 7200;
  const std::vector<Readout> answer{tampered};
  const Verdict v = verify_service_answer(fix.sk, answer, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::sig_fail));
  CHECK(v.has(Finding::readout_missing));
}

TEST_CASE("substituting another shipment's readout is the service's fault") {
  Net fix;
  RandomNumber stranger{};
  stranger.fill(8);
  auto [other, other_ev] = forge_observation(stranger, fix.tag, 95, "dock", to_bytes("cargo"),
                                             fix.reader_kp.priv, key_digest(fix.reader_kp.pub));
  const std::vector<Readout> answer{other};
  const Verdict v = verify_service_answer(fix.sk, answer, fix.view());
  CHECK(v.outcome == Outcome::service_fault);
  CHECK(v.has(Finding::key_mismatch));
  CHECK(v.has(Finding::readout_missing));
}

TEST_CASE("auditing honest evidence nodes finds nothing") {
  Net fix(5);
  const ChainView view = fix.view();
  const auto expected = view.evidence_quorum(fix.sk);
  REQUIRE(expected.reachable);
  REQUIRE(expected.records.size() == 1);
  const auto verdicts = audit_evidence_service(fix.sk, expected.records, view);
  REQUIRE(verdicts.size() == 5);
  for (const NodeVerdict& nv : verdicts) {
    CHECK(nv.verdict.outcome == Outcome::authentic);
    CHECK(nv.verdict.findings.empty());
  }
}

TEST_CASE("auditing pins each faulty node's behaviour") {
  Net fix(5);
  ChainNode& withholder = fix.net.node(1);
  withholder.set_fault(FaultMode::lying);
  withholder.lies().withhold_evidence = true;

  fix.net.node(2).set_fault(FaultMode::silent);

  ChainNode& fabricator = fix.net.node(3);
  fabricator.set_fault(FaultMode::lying);
  Evidence fake = fix.ev;
  fake.content_digest = hash(to_bytes("invented content"));
  fabricator.lies().fabricated[fix.sk].push_back(EvidenceRecord{fake, 105});
  fabricator.lies().garbage_proofs = true;

  const ChainView view = fix.view();
  const auto expected = view.evidence_quorum(fix.sk);
  REQUIRE(expected.reachable);  // nodes 0 and 4 plus the fabricator still vouch
  REQUIRE(expected.records.size() == 1);

  const auto verdicts = audit_evidence_service(fix.sk, expected.records, view);
  REQUIRE(verdicts.size() == 5);
  CHECK(verdicts[0].verdict.outcome == Outcome::authentic);
  CHECK(verdicts[1].verdict.outcome == Outcome::evidence_fault);
  CHECK(verdicts[1].verdict.has(Finding::evidence_withheld));
  CHECK(verdicts[2].verdict.outcome == Outcome::evidence_fault);
  CHECK(verdicts[2].verdict.has(Finding::node_unreachable));
  CHECK(verdicts[3].verdict.outcome == Outcome::evidence_fault);
  CHECK(verdicts[3].verdict.has(Finding::poe_fail));
  CHECK(verdicts[4].verdict.outcome == Outcome::authentic);
}

TEST_CASE("an audited answer for the wrong shipment is a key mismatch") {
  Net fix(5);
  ChainNode& liar = fix.net.node(1);
  liar.set_fault(FaultMode::lying);
  Evidence fake = fix.ev;
  fake.search_key = hash(to_bytes("unrelated"));
  liar.lies().fabricated[fix.sk].push_back(EvidenceRecord{fake, 105});

  const ChainView view = fix.view();
  const auto expected = view.evidence_quorum(fix.sk);
  const auto verdicts = audit_evidence_service(fix.sk, expected.records, view);
  CHECK(verdicts[1].verdict.has(Finding::key_mismatch));
  CHECK(verdicts[1].verdict.outcome == Outcome::evidence_fault);
}

TEST_CASE("one rewritten replica is outvoted and remembered") {
  Net fix(5);
  fix.net.node(2).rewrite_without_term(term_digest(Term{fix.ev}), fix.params.work_cost_per_block);

  const ChainView view = fix.view();
  const Verdict v = verify_readout(fix.ro, fix.sk, view);
  CHECK(v.outcome == Outcome::authentic);
  CHECK(view.divergent_nodes().count(2) == 1);
}

TEST_CASE("elapsed time claims are settled by the anchor alone") {
  Net fix;
  const ChainView view = fix.view();
  const Term anchored{fix.ev};

  CHECK(check_elapsed_time(anchored, 95, 500, view) == TimeCheck::upheld);
  // Claims the term is older than its anchor says.
  CHECK(check_elapsed_time(anchored, 900, 2000, view) == TimeCheck::refuted);

  Evidence never;
  never.search_key = hash(to_bytes("never"));
  never.content_digest = hash(to_bytes("anchored"));
  CHECK(check_elapsed_time(Term{never}, 95, 500, view) == TimeCheck::refuted);

  CHECK_THROWS_AS(check_elapsed_time(anchored, 95, 150, view), ParameterError);

  fix.net.node(1).set_fault(FaultMode::silent);
  fix.net.node(2).set_fault(FaultMode::silent);
  CHECK(check_elapsed_time(anchored, 95, 500, fix.view()) == TimeCheck::unproven);
}

TEST_CASE("alibi checks expose records invented after the fact") {
  Net fix;
  const ChainView view = fix.view();

  // The genuine record could exist at its claimed time.
  CHECK(check_alibi_readout(fix.ro, fix.ro.time, 600, view) == AlibiCheck::consistent);
  CHECK(check_alibi_term(Term{fix.ev}, 95, 600, view) == AlibiCheck::consistent);

  // A forged readout claiming a past observation that never happened.
  RandomNumber invented{};
  invented.fill(11);
  auto [forged, forged_ev] =
      forge_observation(invented, fix.tag, 95, "dock", to_bytes("cargo"), fix.reader_kp.priv,
                        key_digest(fix.reader_kp.pub));
  CHECK(check_alibi_readout(forged, 95, 600, view) == AlibiCheck::fabrication_detected);
  CHECK(check_alibi_term(Term{forged_ev}, 95, 600, view) == AlibiCheck::fabrication_detected);

  CHECK_THROWS_AS(check_alibi_readout(fix.ro, 95, 100, view), ParameterError);
}

TEST_CASE("anchoring a backdated record late still gives it away") {
  Net fix;
  RandomNumber n2{};
  n2.fill(12);
  auto [late_ro, late_ev] = forge_observation(n2, fix.tag, 95, "dock", to_bytes("cargo"),
                                              fix.reader_kp.priv, key_digest(fix.reader_kp.pub));
  fix.net.submit(0, Term{late_ev});
  fix.net.on_tick(405);  // anchored far from the claimed t=95
  while (fix.net.gossip_round() > 0) {
  }
  const ChainView view = fix.view();
  CHECK(check_alibi_readout(late_ro, 95, 600, view) == AlibiCheck::fabrication_detected);
  CHECK(check_alibi_term(Term{late_ev}, 95, 600, view) == AlibiCheck::fabrication_detected);
  // At its true anchoring time the same record is consistent.
  CHECK(check_alibi_term(Term{late_ev}, 405, 600, view) == AlibiCheck::consistent);
}

TEST_CASE("client messages carry only digests and block times") {
  Net fix;
  std::vector<ChainMessage> log;
  const ChainView view(fix.net.all_nodes(), &fix.pki, fix.params, "client",
                       [&](const ChainMessage& m) { log.push_back(m); });
  const Verdict v = verify_readout(fix.ro, fix.sk, view);
  CHECK(v.outcome == Outcome::authentic);
  REQUIRE(!log.empty());

  // Neither the nonce, the tag id, the location text, nor the cargo bytes
  // appear in any message between client and chain.
  const Bytes nonce_bytes(fix.nonce.begin(), fix.nonce.end());
  const Bytes tag_bytes(fix.tag.begin(), fix.tag.end());
  const Bytes loc_bytes = to_bytes("dock");
  const Bytes data_bytes = to_bytes("cargo");
  const auto contains = [](const Bytes& hay, const Bytes& needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
  };
  for (const ChainMessage& m : log) {
    CHECK_FALSE(contains(m.payload, nonce_bytes));
    CHECK_FALSE(contains(m.payload, tag_bytes));
    CHECK_FALSE(contains(m.payload, loc_bytes));
    CHECK_FALSE(contains(m.payload, data_bytes));
  }
}
