#include "evichain/vendor.hpp"

namespace evichain {

Bytes certificate_signed_payload(const PublicKey& reader_public, Timestamp valid_from,
                                 Timestamp valid_until) {
  Encoder enc;
  enc.raw(FieldTag::public_key, reader_public.bytes);
  enc.u64(FieldTag::timestamp, valid_from);
  enc.u64(FieldTag::timestamp, valid_until);
  return enc.take();
}

Bytes Certificate::encoded() const {
  Encoder enc;
  enc.raw(FieldTag::public_key, reader_public.bytes);
  enc.u64(FieldTag::timestamp, valid_from);
  enc.u64(FieldTag::timestamp, valid_until);
  enc.raw(FieldTag::signature, sig.bytes);
  enc.digest(FieldTag::key_digest, vendor_key_digest);
  return enc.take();
}

Certificate Certificate::decode(std::span<const std::uint8_t> bytes) {
  const std::vector<Field> fields = evichain::decode(bytes);
  if (fields.size() != 5 || fields[0].tag != FieldTag::public_key ||
      fields[1].tag != FieldTag::timestamp || fields[2].tag != FieldTag::timestamp ||
      fields[3].tag != FieldTag::signature || fields[4].tag != FieldTag::key_digest) {
    throw EncodingError("malformed certificate");
  }
  Certificate cert;
  cert.reader_public.bytes = fields[0].payload;
  cert.valid_from = decode_u64(fields[1]);
  cert.valid_until = decode_u64(fields[2]);
  cert.sig.bytes = fields[3].payload;
  cert.vendor_key_digest = decode_digest(fields[4]);
  return cert;
}

Digest Certificate::reader_key_digest() const { return key_digest(reader_public); }

Digest certificate_digest(const Certificate& cert) { return hash(cert.encoded()); }

Vendor::Vendor(std::string name, KeyPair key)
    : name_(std::move(name)), key_(std::move(key)), key_digest_(evichain::key_digest(key_.pub)) {}

Certificate Vendor::make_certificate(const PublicKey& reader_public, Timestamp valid_from,
                                     Timestamp valid_until) const {
  if (valid_from >= valid_until) {
    throw WindowError("certificate window must satisfy valid_from < valid_until");
  }
  Certificate cert;
  cert.reader_public = reader_public;
  cert.valid_from = valid_from;
  cert.valid_until = valid_until;
  cert.sig = sign(certificate_signed_payload(reader_public, valid_from, valid_until), key_.priv);
  cert.vendor_key_digest = key_digest_;
  return cert;
}

void PkiStub::add(const PkiEntry& entry) {
  if (entry.valid_from >= entry.valid_until) {
    throw WindowError("pki entry window must satisfy valid_from < valid_until");
  }
  entries_[key_digest(entry.key)] = entry;
}

std::optional<PublicKey> PkiStub::lookup(const Digest& digest, Timestamp t) const {
  const auto it = entries_.find(digest);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  if (t < it->second.valid_from || t > it->second.valid_until) {
    return std::nullopt;
  }
  return it->second.key;
}

const PkiEntry* PkiStub::find(const Digest& digest) const {
  const auto it = entries_.find(digest);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace evichain
