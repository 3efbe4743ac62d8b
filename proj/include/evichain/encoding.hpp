#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evichain/common.hpp"
#include "evichain/crypto.hpp"

namespace evichain {

// Registered field tags for the canonical encoding. Every field is written
// as tag byte, 4-byte big-endian payload length, payload. Length prefixes
// make the encoding self-delimiting and injective: no two distinct field
// lists produce the same byte sequence.
enum class FieldTag : std::uint8_t {
  random_number = 0x01,
  tag_id = 0x02,
  timestamp = 0x03,
  location = 0x04,
  data = 0x05,
  digest = 0x06,
  public_key = 0x07,
  signature = 0x08,
  key_digest = 0x09,
  merkle_left = 0x0a,
  merkle_right = 0x0b,
  leaf_index = 0x0c,
  proof_side = 0x0d,
  block_height = 0x0e,
  prev_digest = 0x0f,
  merkle_root = 0x10,
  evidence_term = 0x11,
  certificate_term = 0x12,
  window_id = 0x13,
  created_at = 0x14,
};

bool is_registered(FieldTag tag);

struct Field {
  FieldTag tag;
  Bytes payload;

  bool operator==(const Field&) const = default;
};

// Throws EncodingError on an unregistered tag.
Bytes encode(std::span<const Field> fields);

// Inverse of encode. Throws EncodingError on truncation, trailing garbage,
// or an unregistered tag: decode(encode(fs)) == fs for all valid fs.
std::vector<Field> decode(std::span<const std::uint8_t> bytes);

// Fluent builder for the common cases. Timestamps and other integers are
// written as 8-byte big-endian payloads.
class Encoder {
 public:
  Encoder& raw(FieldTag tag, std::span<const std::uint8_t> payload);
  Encoder& text(FieldTag tag, std::string_view payload);
  Encoder& u64(FieldTag tag, std::uint64_t value);
  Encoder& digest(FieldTag tag, const Digest& d);

  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

std::uint64_t decode_u64(const Field& f);  // EncodingError unless payload is 8 bytes
Digest decode_digest(const Field& f);      // EncodingError unless payload is 32 bytes

}  // namespace evichain
