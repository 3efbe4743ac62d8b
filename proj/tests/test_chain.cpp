#include <doctest.h>

#include "evichain/chain.hpp"

using namespace evichain;

namespace {

TagId make_id(std::uint8_t b) {
  TagId id{};
  id.fill(b);
  return id;
}

RandomNumber make_nonce(std::uint8_t b) {
  RandomNumber n{};
  n.fill(b);
  return n;
}

struct Rig {
  PkiStub pki;
  KeyPair vendor_kp = generate_keypair(100);
  Vendor vendor{"vendor-1", vendor_kp};
  KeyPair reader_kp = generate_keypair(1);
  Certificate cert;

  Rig() : cert(Certificate{}) {
    pki.add(PkiEntry{vendor_kp.pub, 0, 100000});
    cert = vendor.make_certificate(reader_kp.pub, 10, 50000);
  }

  Evidence make_evidence(Timestamp t, std::uint8_t salt = 1) const {
    Evidence ev;
    ev.search_key = readout_search_key(make_nonce(salt), make_id(salt));
    ev.content_digest = readout_content_digest(t, "dock", to_bytes("d"));
    ev.sig = sign(signed_payload(ev.search_key, ev.content_digest), reader_kp.priv);
    ev.key_digest = key_digest(reader_kp.pub);
    return ev;
  }
};

}  // namespace

TEST_CASE("terms survive their wire format") {
  Rig rig;
  const Term ev{rig.make_evidence(95)};
  CHECK(decode_term(encode_term(ev)) == ev);
  const Term cert{rig.cert};
  CHECK(decode_term(encode_term(cert)) == cert);
  CHECK(term_digest(ev) != term_digest(cert));
}

TEST_CASE("nodes accept valid terms and forget invalid ones") {
  Rig rig;
  ChainNode node(0, &rig.pki);

  // Evidence before any certificate: the key is unobtainable.
  const Evidence ev = rig.make_evidence(95);
  CHECK(node.submit(Term{ev}) == ChainNode::Ingest::forgotten);
  CHECK_FALSE(node.knows_term(term_digest(Term{ev})));

  CHECK(node.submit(Term{rig.cert}) == ChainNode::Ingest::accepted);
  CHECK(node.submit(Term{ev}) == ChainNode::Ingest::accepted);
  CHECK(node.knows_term(term_digest(Term{ev})));

  // Duplicates are idempotent.
  CHECK(node.submit(Term{ev}) == ChainNode::Ingest::accepted);
  CHECK(node.pending_terms().size() == 2);

  // Forged signature.
  Evidence forged = rig.make_evidence(96);
  forged.sig.bytes[0] ^= 1;
  CHECK(node.submit(Term{forged}) == ChainNode::Ingest::forgotten);

  // Certificate outside the vendor's pki window.
  const Certificate bad_window = rig.vendor.make_certificate(rig.reader_kp.pub, 10, 200000);
  CHECK(node.submit(Term{bad_window}) == ChainNode::Ingest::forgotten);
}

TEST_CASE("readout timestamps are checked against the certificate window") {
  Rig rig;
  const KeyResolver resolve = [&](const Digest& kd) -> std::vector<CertWindow> {
    if (kd != key_digest(rig.reader_kp.pub)) {
      return {};
    }
    return {CertWindow{rig.reader_kp.pub, rig.cert.valid_from, rig.cert.valid_until}};
  };

  Readout ro;
  ro.nonce = make_nonce(1);
  ro.tag_id = make_id(1);
  ro.location = "dock";
  ro.data = to_bytes("d");
  ro.key_digest = key_digest(rig.reader_kp.pub);

  const auto sign_at = [&](Timestamp t) {
    ro.time = t;
    ro.sig = sign(signed_payload(readout_search_key(ro.nonce, ro.tag_id),
                                 readout_content_digest(t, ro.location, ro.data)),
                  rig.reader_kp.priv);
  };

  sign_at(10);  // window start, inclusive
  CHECK_FALSE(validate_readout(ro, resolve));
  sign_at(9);
  CHECK(validate_readout(ro, resolve) == InvalidReason::cert_window);
  sign_at(50000);  // window end, inclusive
  CHECK_FALSE(validate_readout(ro, resolve));
  sign_at(50001);
  CHECK(validate_readout(ro, resolve) == InvalidReason::cert_window);
}

TEST_CASE("block creation confirms pending terms and assigns bct") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);

  net.submit(0, Term{rig.cert});
  const Evidence ev = rig.make_evidence(95);
  net.submit(0, Term{ev});  // submitted at t=95, interval 15

  CHECK_FALSE(net.on_tick(95).has_value());  // not a boundary
  const auto block = net.on_tick(105);
  REQUIRE(block.has_value());
  CHECK(block->height == 0);
  CHECK(block->created_at == 105);
  CHECK(block->terms.size() == 2);
  CHECK(block->merkle_root == block_terms_root(block->terms));

  const auto bct = net.node(0).bct_of(term_digest(Term{ev}));
  REQUIRE(bct.responded);
  REQUIRE(bct.value.has_value());
  CHECK(*bct.value == 105);

  // bct is stable across repeated queries.
  CHECK(net.node(0).bct_of(term_digest(Term{ev})).value == bct.value);
}

TEST_CASE("gossip spreads terms and blocks to every node") {
  Rig rig;
  SimParams params;
  ChainNetwork net(4, &rig.pki, params);

  net.submit(1, Term{rig.cert});
  const Evidence ev = rig.make_evidence(95);
  net.submit(1, Term{ev});
  CHECK(net.gossip_round() > 0);
  for (std::size_t i = 0; i < net.size(); ++i) {
    CHECK(net.node(i).knows_term(term_digest(Term{ev})));
  }

  net.on_tick(105);
  net.gossip_round();
  for (std::size_t i = 0; i < net.size(); ++i) {
    REQUIRE(net.node(i).ledger().size() == 1);
    const auto bct = net.node(i).bct_of(term_digest(Term{ev}));
    REQUIRE(bct.responded);
    CHECK(bct.value == Timestamp{105});
  }
  CHECK(net.quiesced() == false);  // receivers still hold fresh copies to forward
  while (net.gossip_round() > 0) {
  }
  CHECK(net.quiesced());
}

TEST_CASE("gossip over a ring still reaches everyone") {
  Rig rig;
  SimParams params;
  ChainNetwork net(5, &rig.pki, params);
  net.connect_ring();
  net.submit(2, Term{rig.cert});
  while (net.gossip_round() > 0) {
  }
  for (std::size_t i = 0; i < net.size(); ++i) {
    CHECK(net.node(i).knows_term(term_digest(Term{rig.cert})));
  }
}

TEST_CASE("out of order blocks wait in the holdback buffer") {
  Rig rig;
  SimParams params;
  ChainNetwork net(2, &rig.pki, params);
  net.submit(0, Term{rig.cert});

  const auto b1 = net.on_tick(15);
  const auto b2 = net.on_tick(30);
  REQUIRE(b1.has_value());
  REQUIRE(b2.has_value());

  ChainNode fresh(9, &rig.pki);
  CHECK(fresh.receive_block(*b2));  // early: buffered, not appended
  CHECK(fresh.ledger().empty());
  CHECK(fresh.receive_block(*b1));  // fills the gap, drains the buffer
  CHECK(fresh.ledger().size() == 2);
  CHECK(verify_ledger(fresh.ledger()));
}

TEST_CASE("blocks containing an invalid term are rejected whole") {
  Rig rig;
  ChainNode producer(0, &rig.pki);
  producer.submit(Term{rig.cert});
  producer.produce_block(15, 1000);

  Evidence forged = rig.make_evidence(20);
  forged.sig.bytes[0] ^= 1;
  Block bad;
  bad.height = 1;
  bad.prev_digest = block_digest(producer.ledger().back());
  bad.created_at = 30;
  bad.terms = {Term{rig.make_evidence(21)}, Term{forged}};
  bad.merkle_root = block_terms_root(bad.terms);

  ChainNode replica(1, &rig.pki);
  REQUIRE(replica.receive_block(producer.ledger().front()));
  CHECK_FALSE(replica.receive_block(bad));
  CHECK(replica.ledger().size() == 1);
}

TEST_CASE("a certificate is visible to evidences later in the same block") {
  Rig rig;
  ChainNode producer(0, &rig.pki);
  producer.submit(Term{rig.cert});
  producer.submit(Term{rig.make_evidence(95)});
  const Block b = producer.produce_block(15, 1000);
  REQUIRE(b.terms.size() == 2);

  ChainNode replica(1, &rig.pki);
  CHECK(replica.receive_block(b));  // cert at index 0 certifies evidence at index 1
  CHECK(replica.ledger().size() == 1);
}

TEST_CASE("proof of existence verifies against the block root") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  const Evidence a = rig.make_evidence(91, 1);
  const Evidence b = rig.make_evidence(92, 2);
  net.submit(0, Term{a});
  net.submit(0, Term{b});
  net.on_tick(105);

  const Digest da = term_digest(Term{a});
  const auto proof = net.node(0).prove_existence(da, 105);
  REQUIRE(proof.responded);
  REQUIRE(proof.value.has_value());
  const auto root = net.node(0).root_at(105);
  REQUIRE(root.responded);
  REQUIRE(root.value.has_value());
  CHECK(proof.value->root == *root.value);
  CHECK(merkle_verify(da, proof.value->proof, *root.value));

  // A term that is not in the block yields no proof.
  const Evidence absent = rig.make_evidence(93, 3);
  const auto missing = net.node(0).prove_existence(term_digest(Term{absent}), 105);
  CHECK(missing.responded);
  CHECK_FALSE(missing.value.has_value());
}

TEST_CASE("evidence queries return confirmed matches in bct order") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  const Evidence early = rig.make_evidence(12, 7);
  net.submit(0, Term{early});
  net.on_tick(15);
  const Evidence late = rig.make_evidence(17, 7);  // same (nonce, tag): same search key
  net.submit(0, Term{late});
  net.on_tick(30);

  const auto res = net.node(0).query_evidence(early.search_key);
  REQUIRE(res.responded);
  REQUIRE(res.value.size() == 2);
  CHECK(res.value[0].ev == early);
  CHECK(res.value[0].bct == 15);
  CHECK(res.value[1].ev == late);
  CHECK(res.value[1].bct == 30);

  // Unconfirmed terms are not part of query answers.
  const Evidence pending = rig.make_evidence(31, 7);
  net.submit(0, Term{pending});
  CHECK(net.node(0).query_evidence(early.search_key).value.size() == 2);
}

TEST_CASE("certificate queries return the anchored certificate even after expiry") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  net.on_tick(15);
  const auto res = net.node(0).query_certificate(rig.cert.reader_key_digest());
  REQUIRE(res.responded);
  REQUIRE(res.value.has_value());
  CHECK(res.value->cert == rig.cert);
  CHECK(res.value->bct == 15);
}

TEST_CASE("silent nodes do not respond and do not forward") {
  Rig rig;
  ChainNode node(0, &rig.pki, FaultMode::silent);
  node.submit(Term{rig.cert});
  CHECK_FALSE(node.bct_of(term_digest(Term{rig.cert})).responded);
  CHECK_FALSE(node.query_evidence(hash(to_bytes("k"))).responded);
  CHECK(node.take_fresh().empty());
}

TEST_CASE("lying answers: withholding and fabrication") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  const Evidence ev = rig.make_evidence(12);
  net.submit(0, Term{ev});
  net.on_tick(15);
  while (net.gossip_round() > 0) {
  }

  ChainNode& liar = net.node(2);
  liar.set_fault(FaultMode::lying);
  liar.lies().withhold_evidence = true;
  CHECK(liar.query_evidence(ev.search_key).value.empty());
  CHECK_FALSE(net.node(0).query_evidence(ev.search_key).value.empty());

  liar.lies().withhold_evidence = false;
  const Evidence fake = rig.make_evidence(13, 9);
  liar.lies().fabricated[ev.search_key].push_back(EvidenceRecord{fake, 15});
  const auto res = liar.query_evidence(ev.search_key);
  CHECK(res.value.size() == 2);

  liar.lies().garbage_proofs = true;
  const auto junk = liar.prove_existence(term_digest(Term{fake}), 15);
  REQUIRE(junk.responded);
  REQUIRE(junk.value.has_value());
  const auto honest_root = net.node(0).root_at(15);
  CHECK_FALSE(merkle_verify(term_digest(Term{fake}), junk.value->proof, *honest_root.value));
}

TEST_CASE("history rewrite pays work and diverges from honest replicas") {
  Rig rig;
  SimParams params;
  ChainNetwork net(3, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  const Evidence ev = rig.make_evidence(12);
  net.submit(0, Term{ev});
  net.on_tick(15);
  net.on_tick(30);
  net.on_tick(45);
  while (net.gossip_round() > 0) {
  }

  ChainNode& attacker = net.node(2);
  const std::uint64_t honest_work = attacker.work_spent();
  const Digest d = term_digest(Term{ev});
  const std::size_t remined = attacker.rewrite_without_term(d, params.work_cost_per_block);
  CHECK(remined == 3);  // the edited block plus the whole suffix
  CHECK(attacker.work_spent() == honest_work + 3 * params.work_cost_per_block);

  // Internally consistent, but no longer the honest history.
  CHECK(verify_ledger(attacker.ledger()));
  CHECK_FALSE(attacker.bct_of(d).value.has_value());
  CHECK(net.node(0).bct_of(d).value == Timestamp{15});
  CHECK(attacker.root_at(15).value != net.node(0).root_at(15).value);
}

TEST_CASE("ledger verification catches every single-bit mutation") {
  Rig rig;
  SimParams params;
  ChainNetwork net(1, &rig.pki, params);
  net.submit(0, Term{rig.cert});
  net.submit(0, Term{rig.make_evidence(12, 1)});
  net.on_tick(15);
  net.submit(0, Term{rig.make_evidence(20, 2)});
  net.on_tick(30);
  net.on_tick(45);

  std::vector<Bytes> encoded;
  for (const Block& b : net.node(0).ledger()) {
    encoded.push_back(b.encoded());
  }
  const Digest tip = hash(encoded.back());
  REQUIRE(verify_encoded_ledger(encoded, tip));

  // Flip one bit at a sampling of positions in every block.
  for (std::size_t blk = 0; blk < encoded.size(); ++blk) {
    for (std::size_t pos = 0; pos < encoded[blk].size(); pos += 3) {
      std::vector<Bytes> mutated = encoded;
      mutated[blk][pos] ^= 0x01;
      CHECK_FALSE(verify_encoded_ledger(mutated, tip));
    }
  }
}

TEST_CASE("blocks survive their wire format") {
  Rig rig;
  ChainNode producer(0, &rig.pki);
  producer.submit(Term{rig.cert});
  producer.submit(Term{rig.make_evidence(12)});
  const Block b = producer.produce_block(15, 1000);
  const Block back = Block::decode(b.encoded());
  CHECK(back.height == b.height);
  CHECK(back.prev_digest == b.prev_digest);
  CHECK(back.created_at == b.created_at);
  CHECK(back.merkle_root == b.merkle_root);
  CHECK(back.terms == b.terms);
  CHECK(back.encoded() == b.encoded());
}
