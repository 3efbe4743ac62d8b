#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "evichain/common.hpp"
#include "evichain/proximity.hpp"

namespace evichain {

// Tag identifiers are 256-bit values drawn at manufacture; the world
// registry enforces that no two tags ever share one.
using TagId = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kTagMemoryBound = 4096;

// Passive carrier: no clock, no crypto, no agency. It only holds an id,
// one rewritable memory area, and is moved around by the simulation.
class Tag {
 public:
  Tag(const TagId& id, Timestamp created_at, Location at);

  const TagId& id() const { return id_; }

  // Location in effect at time t. Entries apply from their timestamp on;
  // a query before creation reports the creation location.
  const Location& loc(Timestamp t) const;

  // Throws OrderingError unless t is strictly after the last history entry.
  void move(Timestamp t, Location to);

  // What a reader in range obtains: the id and the current memory image.
  std::pair<TagId, Bytes> read(Timestamp t) const;

  // Replaces the memory contents. Throws CapacityError beyond the bound.
  void write(Timestamp t, std::span<const std::uint8_t> data);

  const Bytes& memory() const { return memory_; }
  Timestamp created_at() const { return history_.front().first; }

 private:
  TagId id_;
  Bytes memory_;
  std::vector<std::pair<Timestamp, Location>> history_;
};

}  // namespace evichain
