#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "evichain/anchor.hpp"

namespace evichain {

// Reference exchange rate used by the shipped estimates. Back-solved so the
// fastest tier (85 Gwei, 18 root writes per day) lands on 5,705 USD/year
// with the measured store cost.
inline constexpr double kDefaultEthUsd = 230.912;
inline constexpr double kDefaultWritesPerDay = 18.0;

struct PricePolicy {
  const char* name;
  double gas_price_gwei;
};

inline constexpr PricePolicy kFastestPolicy{"fastest", 85.0};
inline constexpr PricePolicy kAveragePolicy{"average", 53.0};
inline constexpr PricePolicy kCheapPolicy{"cheap", 33.0};

struct ConfirmRange {
  double lo_s = 0.0;
  double hi_s = 0.0;
};

// Expected confirmation delay for the three price tiers; prices outside the
// tiers have no table entry.
std::optional<ConfirmRange> confirm_time_range(double gas_price_gwei);

struct GasEstimate {
  double gas_price_gwei = 0.0;
  std::uint64_t gas_per_store = 0;
  double writes_per_day = 0.0;
  double eth_usd = 0.0;
  double eth_per_write = 0.0;
  double eth_per_year = 0.0;
  double usd_per_year = 0.0;
  std::optional<ConfirmRange> confirm;
};

// Annual cost of anchoring at a fixed cadence. One write stores one Merkle
// root regardless of how many evidences the window covered. Throws
// ParameterError on non-positive inputs.
GasEstimate estimate_annual_cost(double gas_price_gwei,
                                 double writes_per_day = kDefaultWritesPerDay,
                                 double eth_usd = kDefaultEthUsd,
                                 std::uint64_t gas_per_store = AnchorContract::kStoreGas);

}  // namespace evichain
