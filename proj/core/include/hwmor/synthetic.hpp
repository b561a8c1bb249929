#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwmor/market_data.hpp"

namespace hwmor {

struct SyntheticHistoryOptions {
  int periods = 1306;
  std::uint64_t seed = 20240101;
  std::vector<std::string> labels{"1D", "1Y",  "2Y",  "3Y",  "4Y",  "5Y",  "6Y",  "7Y",  "8Y", "9Y",
                                  "10Y", "12Y", "15Y", "20Y", "25Y", "30Y", "35Y", "40Y", "50Y"};
  std::string start_date = "2015-01-02";
  double short_level = 0.004;  // rate at the short end of the mean curve
  double long_level = 0.025;   // asymptotic long rate
  double daily_vol = 0.006;    // daily log-vol of the level factor
  double idiosyncratic = 0.001;  // per-tenor noise, relative to daily_vol
};

/// Positive, upward-sloping daily history driven by level, slope and curvature
/// factors in log space. Business days only; deterministic in the seed.
RateHistory synthetic_history(const SyntheticHistoryOptions& options = {});

}  // namespace hwmor
