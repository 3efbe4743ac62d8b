#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evichain {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);  // throws EncodingError on odd length / bad digit

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

// Error taxonomy. Preconditions and malformed inputs throw; absence of a
// value is expressed with std::optional, and verification outcomes with
// bool or Verdict, never with exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EncodingError : Error {
  using Error::Error;
};

struct KeyMaterialError : Error {
  using Error::Error;
};

struct CapacityError : Error {
  using Error::Error;
};

struct OrderingError : Error {
  using Error::Error;
};

struct WindowError : Error {
  using Error::Error;
};

struct OutOfRangeError : Error {
  using Error::Error;
};

struct IndeterminateError : Error {
  using Error::Error;
};

struct IdCollisionError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Deterministic random source. All simulation randomness flows through one
// seeded instance so a scenario replays bit-identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). n = 0 is a ParameterError.
  std::uint64_t below(std::uint64_t n);

  // Uniform in [0, 1).
  double unit();

  // Fills out with bytes drawn from successive u64 values, low byte first.
  void fill(std::span<std::uint8_t> out);

 private:
  std::mt19937_64 gen_;
};

}  // namespace evichain
