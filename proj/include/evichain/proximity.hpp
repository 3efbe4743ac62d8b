#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "evichain/common.hpp"

namespace evichain {

// Simulation time in ticks; one tick models one second.
using Timestamp = std::uint64_t;

struct TimeParams {
  std::uint64_t close = 30;   // |a - b| <= close  => the instants are close
  std::uint64_t apart = 120;  // |a - b| >= apart  => enough time has passed

  // close < apart keeps the two relations mutually exclusive.
  void validate() const;
};

bool time_close(Timestamp a, Timestamp b, const TimeParams& p = {});
bool time_apart(Timestamp a, Timestamp b, const TimeParams& p = {});

struct Location {
  std::string label;
  std::optional<std::array<double, 2>> coords;  // metres on a flat plane

  bool operator==(const Location&) const = default;
};

// Euclidean distance <= range. Throws IndeterminateError when either side
// lacks coordinates; label equality alone never decides nearness.
bool location_near(const Location& a, const Location& b, double range_m);

struct SimParams {
  TimeParams time;
  double read_range_m = 10.0;           // UHF passive tags reach a few metres
  std::uint64_t block_interval = 15;    // ticks between block creations
  std::uint64_t forget_after = 3600;    // reader plaintext retention bound
  std::uint64_t work_cost_per_block = 1000;  // accounted proof-of-work units

  // BCT may lag the claimed observation by one block plus clock slack.
  std::uint64_t bct_tolerance() const { return block_interval + time.close; }

  void validate() const;
};

}  // namespace evichain
