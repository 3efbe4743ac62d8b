#include "evichain/reader.hpp"

#include <cstring>

namespace evichain {

Digest readout_search_key(const RandomNumber& nonce, const TagId& id) {
  Encoder enc;
  enc.raw(FieldTag::random_number, nonce);
  enc.raw(FieldTag::tag_id, id);
  return hash(enc.take());
}

Digest readout_content_digest(Timestamp time, std::string_view location,
                              std::span<const std::uint8_t> data) {
  Encoder enc;
  enc.u64(FieldTag::timestamp, time);
  enc.text(FieldTag::location, location);
  enc.raw(FieldTag::data, data);
  return hash(enc.take());
}

Bytes signed_payload(const Digest& search_key, const Digest& content_digest) {
  Encoder enc;
  enc.digest(FieldTag::digest, search_key);
  enc.digest(FieldTag::digest, content_digest);
  return enc.take();
}

Bytes Readout::encoded() const {
  Encoder enc;
  enc.raw(FieldTag::random_number, nonce);
  enc.raw(FieldTag::tag_id, tag_id);
  enc.u64(FieldTag::timestamp, time);
  enc.text(FieldTag::location, location);
  enc.raw(FieldTag::data, data);
  enc.raw(FieldTag::signature, sig.bytes);
  enc.digest(FieldTag::key_digest, key_digest);
  return enc.take();
}

Readout Readout::decode(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = evichain::decode(bytes);
  if (fields.size() != 7 || fields[0].tag != FieldTag::random_number ||
      fields[1].tag != FieldTag::tag_id || fields[2].tag != FieldTag::timestamp ||
      fields[3].tag != FieldTag::location || fields[4].tag != FieldTag::data ||
      fields[5].tag != FieldTag::signature || fields[6].tag != FieldTag::key_digest) {
    throw EncodingError("malformed readout");
  }
  Readout ro;
  if (fields[0].payload.size() != ro.nonce.size() || fields[1].payload.size() != ro.tag_id.size()) {
    throw EncodingError("malformed readout identifiers");
  }
  std::memcpy(ro.nonce.data(), fields[0].payload.data(), ro.nonce.size());
  std::memcpy(ro.tag_id.data(), fields[1].payload.data(), ro.tag_id.size());
  ro.time = decode_u64(fields[2]);
  ro.location.assign(fields[3].payload.begin(), fields[3].payload.end());
  ro.data = fields[4].payload;
  ro.sig.bytes = fields[5].payload;
  ro.key_digest = decode_digest(fields[6]);
  return ro;
}

Bytes Evidence::encoded() const {
  Encoder enc;
  enc.digest(FieldTag::digest, search_key);
  enc.digest(FieldTag::digest, content_digest);
  enc.raw(FieldTag::signature, sig.bytes);
  enc.digest(FieldTag::key_digest, key_digest);
  return enc.take();
}

Evidence Evidence::decode(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = evichain::decode(bytes);
  if (fields.size() != 4 || fields[0].tag != FieldTag::digest ||
      fields[1].tag != FieldTag::digest || fields[2].tag != FieldTag::signature ||
      fields[3].tag != FieldTag::key_digest) {
    throw EncodingError("malformed evidence");
  }
  Evidence ev;
  ev.search_key = decode_digest(fields[0]);
  ev.content_digest = decode_digest(fields[1]);
  ev.sig.bytes = fields[2].payload;
  ev.key_digest = decode_digest(fields[3]);
  return ev;
}

Evidence evidence_of(const Readout& ro) {
  Evidence ev;
  ev.search_key = readout_search_key(ro.nonce, ro.tag_id);
  ev.content_digest = readout_content_digest(ro.time, ro.location, ro.data);
  ev.sig = ro.sig;
  ev.key_digest = ro.key_digest;
  return ev;
}

Digest readout_digest(const Readout& ro) { return hash(ro.encoded()); }

Digest evidence_digest(const Evidence& ev) { return hash(ev.encoded()); }

Reader::Reader(KeyPair certified, std::string owner_service, Location site,
               std::uint64_t forget_after, int submit_node)
    : certified_(certified),
      active_(std::move(certified)),
      id_(key_digest(certified_.pub)),
      owner_(std::move(owner_service)),
      site_(std::move(site)),
      forget_after_(forget_after),
      submit_node_(submit_node) {}

std::pair<Readout, Evidence> Reader::observe(Tag& tag, Timestamp now, const RandomNumber& nonce,
                                             const ObserveOptions& opts, double read_range_m) {
  if (!location_near(site_, tag.loc(now), read_range_m)) {
    throw OutOfRangeError("tag is beyond read range");
  }
  if (opts.write_data) {
    tag.write(now, *opts.write_data);
  }
  const auto [id, data] = tag.read(now);

  Readout ro;
  ro.nonce = nonce;
  ro.tag_id = id;
  ro.time = opts.reported_time.value_or(now);
  ro.location = site_.label;
  ro.data = data;
  // A tampered reader still claims the certified key: the digest is the
  // identity the outside world knows, and the forged signature is exactly
  // what verification is meant to catch.
  ro.key_digest = id_;
  const Digest sk = readout_search_key(ro.nonce, ro.tag_id);
  const Digest cd = readout_content_digest(ro.time, ro.location, ro.data);
  ro.sig = sign(signed_payload(sk, cd), active_.priv);

  Evidence ev;
  ev.search_key = sk;
  ev.content_digest = cd;
  ev.sig = ro.sig;
  ev.key_digest = ro.key_digest;

  // All throwing work is done; enqueue both records and the recall entry.
  outbox_.push_back(Delivery{ro, owner_});
  outbox_.push_back(Delivery{ev, "node:" + std::to_string(submit_node_)});
  recall_.push_back(PlaintextRecord{id, data, now});
  return {std::move(ro), std::move(ev)};
}

std::size_t Reader::flush_outbox(const DeliveryFn& attempt) {
  std::size_t removed = 0;
  std::deque<Delivery> keep;
  while (!outbox_.empty()) {
    Delivery item = std::move(outbox_.front());
    outbox_.pop_front();
    if (attempt(item)) {
      ++removed;
    } else {
      keep.push_back(std::move(item));
    }
  }
  outbox_ = std::move(keep);
  return removed;
}

void Reader::forget_expired(Timestamp now) {
  std::erase_if(recall_, [&](const PlaintextRecord& r) {
    return now >= r.seen_at && now - r.seen_at >= forget_after_;
  });
}

void Reader::tamper(Rng& rng) {
  active_ = generate_keypair(rng.next_u64());
  tampered_ = true;
}

std::pair<Readout, Evidence> forge_observation(const RandomNumber& nonce, const TagId& id,
                                               Timestamp claimed_time,
                                               std::string_view claimed_location,
                                               std::span<const std::uint8_t> data,
                                               const PrivateKey& signing_key,
                                               const Digest& claimed_key_digest) {
  Readout ro;
  ro.nonce = nonce;
  ro.tag_id = id;
  ro.time = claimed_time;
  ro.location = std::string(claimed_location);
  ro.data.assign(data.begin(), data.end());
  ro.key_digest = claimed_key_digest;
  const Digest sk = readout_search_key(nonce, id);
  const Digest cd = readout_content_digest(claimed_time, claimed_location, data);
  ro.sig = sign(signed_payload(sk, cd), signing_key);
  return {ro, evidence_of(ro)};
}

}  // namespace evichain
