#include "evichain/tag.hpp"

namespace evichain {

Tag::Tag(const TagId& id, Timestamp created_at, Location at) : id_(id) {
  history_.emplace_back(created_at, std::move(at));
}

const Location& Tag::loc(Timestamp t) const {
  const Location* current = &history_.front().second;
  for (const auto& [since, where] : history_) {
    if (since <= t) {
      current = &where;
    } else {
      break;
    }
  }
  return *current;
}

void Tag::move(Timestamp t, Location to) {
  if (t <= history_.back().first) {
    throw OrderingError("tag move must be strictly after the last history entry");
  }
  history_.emplace_back(t, std::move(to));
}

std::pair<TagId, Bytes> Tag::read(Timestamp) const { return {id_, memory_}; }

void Tag::write(Timestamp, std::span<const std::uint8_t> data) {
  if (data.size() > kTagMemoryBound) {
    throw CapacityError("tag memory bound exceeded");
  }
  memory_.assign(data.begin(), data.end());
}

}  // namespace evichain
