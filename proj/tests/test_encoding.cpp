#include <doctest.h>

#include "evichain/common.hpp"
#include "evichain/encoding.hpp"

using namespace evichain;

TEST_CASE("encode writes tag, length, payload") {
  const std::vector<Field> fields{{FieldTag::data, to_bytes("ab")}};
  CHECK(to_hex(encode(fields)) == "05000000026162");
}

TEST_CASE("encode and decode round trip") {
  const std::vector<Field> fields{
      {FieldTag::random_number, from_hex("00112233445566778899aabbccddeeff")},
      {FieldTag::timestamp, from_hex("0000000000000064")},
      {FieldTag::location, to_bytes("warehouse-a")},
      {FieldTag::data, Bytes{}},
  };
  CHECK(decode(encode(fields)) == fields);
}

TEST_CASE("encoding is injective on field boundaries") {
  // Same concatenated payload bytes, different splits.
  const Bytes a = encode(std::vector<Field>{{FieldTag::data, to_bytes("ab")},
                                            {FieldTag::data, to_bytes("c")}});
  const Bytes b = encode(std::vector<Field>{{FieldTag::data, to_bytes("a")},
                                            {FieldTag::data, to_bytes("bc")}});
  CHECK(a != b);
}

TEST_CASE("unregistered tags are rejected on both sides") {
  const std::vector<Field> bad{{static_cast<FieldTag>(0x7e), to_bytes("x")}};
  CHECK_THROWS_AS(encode(bad), EncodingError);
  CHECK_THROWS_AS(decode(from_hex("7e0000000178")), EncodingError);
}

TEST_CASE("decode rejects truncation and bad lengths") {
  const Bytes good = encode(std::vector<Field>{{FieldTag::data, to_bytes("abc")}});
  for (std::size_t cut = 1; cut < good.size(); ++cut) {
    const Bytes prefix(good.begin(), good.begin() + cut);
    CHECK_THROWS_AS(decode(prefix), EncodingError);
  }
  // Claimed length reaches past the end.
  CHECK_THROWS_AS(decode(from_hex("050000000461")), EncodingError);
}

TEST_CASE("decode of encode round trips under fuzzing") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Field> fields;
    const std::size_t count = rng.below(6);
    for (std::size_t i = 0; i < count; ++i) {
      Field f;
      f.tag = static_cast<FieldTag>(1 + rng.below(0x14));
      f.payload.resize(rng.below(40));
      rng.fill(f.payload);
      fields.push_back(std::move(f));
    }
    CHECK(decode(encode(fields)) == fields);
  }
}

TEST_CASE("encoder helpers agree with manual fields") {
  const Digest d = hash(to_bytes("x"));
  Encoder enc;
  enc.u64(FieldTag::timestamp, 0x0102030405060708ull);
  enc.text(FieldTag::location, "dock");
  enc.digest(FieldTag::digest, d);
  const std::vector<Field> fields = decode(enc.take());
  REQUIRE(fields.size() == 3);
  CHECK(decode_u64(fields[0]) == 0x0102030405060708ull);
  CHECK(fields[1].payload == to_bytes("dock"));
  CHECK(decode_digest(fields[2]) == d);
}

TEST_CASE("integer and digest decoders enforce width") {
  CHECK_THROWS_AS(decode_u64(Field{FieldTag::timestamp, Bytes{1, 2, 3}}), EncodingError);
  CHECK_THROWS_AS(decode_digest(Field{FieldTag::digest, Bytes{1, 2, 3}}), EncodingError);
}
