#include "evichain/proximity.hpp"

#include <cmath>

namespace evichain {

void TimeParams::validate() const {
  if (close >= apart) {
    throw ParameterError("time params require close < apart");
  }
}

namespace {

std::uint64_t distance_ticks(Timestamp a, Timestamp b) { return a > b ? a - b : b - a; }

}  // namespace

bool time_close(Timestamp a, Timestamp b, const TimeParams& p) {
  return distance_ticks(a, b) <= p.close;
}

bool time_apart(Timestamp a, Timestamp b, const TimeParams& p) {
  return distance_ticks(a, b) >= p.apart;
}

bool location_near(const Location& a, const Location& b, double range_m) {
  if (!a.coords || !b.coords) {
    throw IndeterminateError("location_near needs coordinates on both sides");
  }
  const double dx = (*a.coords)[0] - (*b.coords)[0];
  const double dy = (*a.coords)[1] - (*b.coords)[1];
  return std::sqrt(dx * dx + dy * dy) <= range_m;
}

void SimParams::validate() const {
  time.validate();
  if (read_range_m <= 0.0) {
    throw ParameterError("read range must be positive");
  }
  if (block_interval == 0) {
    throw ParameterError("block interval must be positive");
  }
  if (forget_after == 0) {
    throw ParameterError("forget_after must be positive");
  }
}

}  // namespace evichain
