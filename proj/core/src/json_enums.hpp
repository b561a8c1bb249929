#pragma once

#include <nlohmann/json.hpp>

#include "hwmor/market_data.hpp"

namespace hwmor {

NLOHMANN_JSON_SERIALIZE_ENUM(ReturnFormula, {{ReturnFormula::LogRatio, "log_ratio"},
                                             {ReturnFormula::RatioOfLogs, "ratio_of_logs"}})
NLOHMANN_JSON_SERIALIZE_ENUM(YieldConvention, {{YieldConvention::Annualized, "annualized"},
                                               {YieldConvention::Total, "total"}})
NLOHMANN_JSON_SERIALIZE_ENUM(MarchDirection, {{MarchDirection::Forward, "forward"},
                                              {MarchDirection::Backward, "backward"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ResidualAggregation, {{ResidualAggregation::Max, "max"},
                                                   {ResidualAggregation::Rms, "rms"}})
NLOHMANN_JSON_SERIALIZE_ENUM(HorizonMode, {{HorizonMode::Checkpoint, "checkpoint"},
                                           {HorizonMode::Separate, "separate"}})

}  // namespace hwmor
