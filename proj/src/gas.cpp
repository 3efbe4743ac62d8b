#include "evichain/gas.hpp"

#include <cmath>

namespace evichain {

std::optional<ConfirmRange> confirm_time_range(double gas_price_gwei) {
  if (gas_price_gwei >= kFastestPolicy.gas_price_gwei) {
    return ConfirmRange{26.0, 27.0};
  }
  if (gas_price_gwei >= 50.0 && gas_price_gwei <= 53.0) {
    return ConfirmRange{269.0, 299.0};
  }
  if (std::abs(gas_price_gwei - kCheapPolicy.gas_price_gwei) < 1e-9) {
    return ConfirmRange{1091.0, 1140.0};
  }
  return std::nullopt;
}

GasEstimate estimate_annual_cost(double gas_price_gwei, double writes_per_day, double eth_usd,
                                 std::uint64_t gas_per_store) {
  if (gas_price_gwei <= 0.0 || writes_per_day <= 0.0 || eth_usd <= 0.0 || gas_per_store == 0) {
    throw ParameterError("gas estimate inputs must be positive");
  }
  GasEstimate est;
  est.gas_price_gwei = gas_price_gwei;
  est.gas_per_store = gas_per_store;
  est.writes_per_day = writes_per_day;
  est.eth_usd = eth_usd;
  est.eth_per_write = static_cast<double>(gas_per_store) * gas_price_gwei * 1e-9;
  est.eth_per_year = est.eth_per_write * writes_per_day * 365.0;
  est.usd_per_year = est.eth_per_year * eth_usd;
  est.confirm = confirm_time_range(gas_price_gwei);
  return est;
}

}  // namespace evichain
