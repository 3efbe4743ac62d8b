#include "evichain/encoding.hpp"

#include <cstring>

namespace evichain {

bool is_registered(FieldTag tag) {
  const auto v = static_cast<std::uint8_t>(tag);
  return v >= 0x01 && v <= 0x14;
}

namespace {

void append_field(Bytes& out, FieldTag tag, std::span<const std::uint8_t> payload) {
  if (!is_registered(tag)) {
    throw EncodingError("unregistered field tag");
  }
  if (payload.size() > 0xffffffffull) {
    throw EncodingError("field payload too large");
  }
  out.push_back(static_cast<std::uint8_t>(tag));
  const auto len = static_cast<std::uint32_t>(payload.size());
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace

Bytes encode(std::span<const Field> fields) {
  Bytes out;
  for (const Field& f : fields) {
    append_field(out, f.tag, f.payload);
  }
  return out;
}

std::vector<Field> decode(std::span<const std::uint8_t> bytes) {
  std::vector<Field> fields;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 5) {
      throw EncodingError("truncated field header");
    }
    const auto tag = static_cast<FieldTag>(bytes[pos]);
    if (!is_registered(tag)) {
      throw EncodingError("unregistered field tag in input");
    }
    const std::uint32_t len = (static_cast<std::uint32_t>(bytes[pos + 1]) << 24) |
                              (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                              (static_cast<std::uint32_t>(bytes[pos + 3]) << 8) |
                              static_cast<std::uint32_t>(bytes[pos + 4]);
    pos += 5;
    if (bytes.size() - pos < len) {
      throw EncodingError("truncated field payload");
    }
    fields.push_back(Field{tag, Bytes(bytes.begin() + pos, bytes.begin() + pos + len)});
    pos += len;
  }
  return fields;
}

Encoder& Encoder::raw(FieldTag tag, std::span<const std::uint8_t> payload) {
  append_field(out_, tag, payload);
  return *this;
}

Encoder& Encoder::text(FieldTag tag, std::string_view payload) {
  append_field(out_, tag,
               std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()),
                                             payload.size()));
  return *this;
}

Encoder& Encoder::u64(FieldTag tag, std::uint64_t value) {
  std::array<std::uint8_t, 8> buf{};
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<std::uint8_t>(value >> (8 * (7 - i)));
  }
  append_field(out_, tag, buf);
  return *this;
}

Encoder& Encoder::digest(FieldTag tag, const Digest& d) {
  append_field(out_, tag, d.v);
  return *this;
}

std::uint64_t decode_u64(const Field& f) {
  if (f.payload.size() != 8) {
    throw EncodingError("integer field must be 8 bytes");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = (v << 8) | f.payload[i];
  }
  return v;
}

Digest decode_digest(const Field& f) {
  if (f.payload.size() != kDigestSize) {
    throw EncodingError("digest field must be 32 bytes");
  }
  Digest d;
  std::memcpy(d.v.data(), f.payload.data(), kDigestSize);
  return d;
}

}  // namespace evichain
