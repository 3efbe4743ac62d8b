#include <doctest.h>

#include "evichain/anchor.hpp"

using namespace evichain;

namespace {

Digest d(std::uint8_t b) {
  Bytes one{b};
  return hash(one);
}

Evidence make_evidence(const KeyPair& kp, std::uint8_t salt) {
  RandomNumber nonce{};
  nonce.fill(salt);
  TagId tag{};
  tag.fill(salt);
  Evidence ev;
  ev.search_key = readout_search_key(nonce, tag);
  ev.content_digest = readout_content_digest(100 + salt, "dock", to_bytes("x"));
  ev.sig = sign(signed_payload(ev.search_key, ev.content_digest), kp.priv);
  ev.key_digest = key_digest(kp.pub);
  return ev;
}

}  // namespace

TEST_CASE("deployment alone costs deploy gas") {
  AnchorContract c;
  CHECK(c.gas_used() == 149'119);
  CHECK(c.size() == 0);
  CHECK_FALSE(c.is_stored(d(1)));
  CHECK(c.get_stored(d(1)) == 0);
}

TEST_CASE("only first-time stores burn gas") {
  AnchorContract c;
  CHECK_FALSE(c.store(d(1), 7));
  CHECK(c.gas_used() == 149'119 + 44'241);
  CHECK(c.get_stored(d(1)) == 7);

  // Repeat store: reports the prior write, burns nothing, changes nothing.
  CHECK(c.store(d(1), 9));
  CHECK(c.gas_used() == 149'119 + 44'241);
  CHECK(c.get_stored(d(1)) == 7);

  CHECK_FALSE(c.store(d(2), 8));
  CHECK(c.gas_used() == 149'119 + 2 * 44'241);
  CHECK(c.size() == 2);

  // Reads are free.
  for (int i = 0; i < 100; ++i) {
    c.is_stored(d(1));
    c.get_stored(d(2));
  }
  CHECK(c.gas_used() == 149'119 + 2 * 44'241);
}

TEST_CASE("block number zero is reserved as the absent sentinel") {
  AnchorContract c;
  CHECK_THROWS_AS(c.store(d(1), 0), ParameterError);
  CHECK(c.gas_used() == 149'119);
}

TEST_CASE("bulk proof signs the promised window") {
  const KeyPair svc = generate_keypair(42);
  EvidenceAggregator agg(svc);
  agg.add(make_evidence(svc, 1));
  agg.add(make_evidence(svc, 2));
  agg.add(make_evidence(svc, 1));  // duplicate, ignored
  CHECK(agg.window_size() == 2);

  BulkProof bp = agg.issue_bulk_proof();
  CHECK(bp.window_id == 1);
  CHECK(bp.covered.size() == 2);
  CHECK(verify_bulk_proof(bp, svc.pub));
  CHECK_FALSE(verify_bulk_proof(bp, generate_keypair(43).pub));

  bp.covered.push_back(d(9));  // promise tampering breaks the signature
  CHECK_FALSE(verify_bulk_proof(bp, svc.pub));
}

TEST_CASE("anchoring stores one root for the whole window") {
  const KeyPair svc = generate_keypair(42);
  EvidenceAggregator agg(svc);
  AnchorContract contract;

  const Evidence a = make_evidence(svc, 1);
  const Evidence b = make_evidence(svc, 2);
  const Evidence c = make_evidence(svc, 3);
  agg.add(a);
  agg.add(b);
  agg.add(c);

  const BulkProof bp = agg.issue_bulk_proof();
  const auto batch = agg.anchor(contract, 500);
  REQUIRE(batch.has_value());
  CHECK(batch->window_id == 1);
  CHECK(batch->block_no == 500);
  CHECK(contract.get_stored(batch->root) == 500);
  CHECK(contract.gas_used() == 149'119 + 44'241);  // three evidences, one write
  CHECK(agg.window_size() == 0);

  for (const Evidence* ev : {&a, &b, &c}) {
    const Digest leaf = evidence_digest(*ev);
    REQUIRE(batch->proofs.count(leaf) == 1);
    CHECK(merkle_verify(leaf, batch->proofs.at(leaf), batch->root));
  }

  const auto rc = reconfirm_bulk(bp, *batch, contract);
  CHECK(rc.ok);
  CHECK(rc.missing.empty());

  // The next window gets a fresh id.
  agg.add(make_evidence(svc, 4));
  CHECK(agg.issue_bulk_proof().window_id == 2);
}

TEST_CASE("an empty window anchors nothing") {
  const KeyPair svc = generate_keypair(42);
  EvidenceAggregator agg(svc);
  AnchorContract contract;
  CHECK_FALSE(agg.anchor(contract, 500).has_value());
  CHECK(contract.gas_used() == 149'119);
}

TEST_CASE("reconfirmation exposes a broken bulk promise") {
  const KeyPair svc = generate_keypair(42);
  EvidenceAggregator agg(svc);
  AnchorContract contract;

  const Evidence a = make_evidence(svc, 1);
  const Evidence b = make_evidence(svc, 2);
  agg.add(a);
  agg.add(b);
  const BulkProof bp = agg.issue_bulk_proof();

  // The service anchors a tree that quietly drops one promised evidence.
  const Digest dropped = evidence_digest(b);
  const auto batch = agg.anchor(contract, 500, {dropped});
  REQUIRE(batch.has_value());

  const auto rc = reconfirm_bulk(bp, *batch, contract);
  CHECK_FALSE(rc.ok);
  REQUIRE(rc.missing.size() == 1);
  CHECK(rc.missing[0] == dropped);

  // The evidence that was kept still reconfirms.
  const Digest kept = evidence_digest(a);
  REQUIRE(batch->proofs.count(kept) == 1);
  CHECK(merkle_verify(kept, batch->proofs.at(kept), batch->root));
}

TEST_CASE("reconfirmation fails when the root was never anchored") {
  const KeyPair svc = generate_keypair(42);
  EvidenceAggregator agg(svc);
  AnchorContract real;
  AnchorContract never_used;

  agg.add(make_evidence(svc, 1));
  const BulkProof bp = agg.issue_bulk_proof();
  const auto batch = agg.anchor(real, 500);
  REQUIRE(batch.has_value());

  CHECK(reconfirm_bulk(bp, *batch, real).ok);
  CHECK_FALSE(reconfirm_bulk(bp, *batch, never_used).ok);
}
