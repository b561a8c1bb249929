#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace hwmor {

/// Tenor labels and their maturities in year fractions (360-day years for
/// day/week tenors, 12 months per year).
struct TenorGrid {
  std::vector<std::string> labels;
  std::vector<double> times;

  std::size_t size() const noexcept { return times.size(); }
  void validate() const;

  static TenorGrid from_labels(const std::vector<std::string>& labels);
  /// First `count` tenors.
  TenorGrid head(std::size_t count) const;
};

/// Parses "1D", "2W", "6M", "10Y" (and "ON" as a zero-maturity overnight point).
double parse_tenor(const std::string& label);

/// Historical rates, oldest observation first. Rates are decimal fractions.
struct RateHistory {
  TenorGrid grid;
  Eigen::MatrixXd rates;  // n x m
  std::vector<std::string> observation_dates;

  Eigen::Index periods() const noexcept { return rates.rows(); }
  Eigen::Index tenors() const noexcept { return rates.cols(); }
  void validate() const;
};

enum class RateUnit { Decimal, Percent };

RateHistory load_rate_history(const std::filesystem::path& path);
/// Writes decimal-unit CSV; numbers use shortest round-trip formatting so
/// reloading reproduces the matrix bit for bit.
void write_rate_history(const RateHistory& history, const std::filesystem::path& path);

struct ShiftedHistory {
  RateHistory shifted;
  double gamma = 0.0;
};

/// gamma = max(0, -min) + shift_epsilon when min <= 0, else 0.
ShiftedHistory positivity_shift(const RateHistory& history, double shift_epsilon);

enum class ReturnFormula { LogRatio, RatioOfLogs };
enum class YieldConvention { Annualized, Total };
enum class MarchDirection { Forward, Backward };
enum class ResidualAggregation { Max, Rms };
enum class HorizonMode { Checkpoint, Separate };

struct GreedyConfig {
  int I_max = 10;
  int C = 40;
  int C_0 = 20;
  int C_k = 10;
  double eps_tol = 1e-4;
  double e_max_tol = 1e-3;
  int pcr_components = 4;
  ResidualAggregation residual_aggregation = ResidualAggregation::Max;
};

struct FdmConfig {
  int M = 600;
  double theta = 0.5;
  int dt_days = 1;
  /// Fixed computational window; when unset the window follows r_sp +- 7 sigma sqrt(T).
  std::optional<double> r_min = -0.1;
  std::optional<double> r_max = 0.1;
  int checkpoint_days = 30;
  MarchDirection march = MarchDirection::Forward;
};

struct StaticsConfig {
  double b = 0.015;
  double sigma = 0.006;
};

struct PipelineConfig {
  double shift_epsilon = 1e-4;
  double energy_level = 99.99;
  std::uint64_t seed = 20190101;
  int bootstrap_count = 10000;
  int holding_period_days = 2600;
  /// 0 selects the smallest count reaching 99 % cumulative energy.
  int pca_components = 0;
  GreedyConfig greedy;
  FdmConfig fdm;
  /// Unset selects 1e-8 * ||E||_F^2 per curve.
  std::optional<double> tikhonov_mu;

  ReturnFormula return_formula = ReturnFormula::LogRatio;
  bool forward_adjustment = true;
  YieldConvention yield_convention = YieldConvention::Annualized;
  StaticsConfig statics;
  /// Number of leading tenors used for calibration; 0 keeps all.
  int calibration_tenors = 0;
  std::vector<double> horizons{5.0, 10.0};
  HorizonMode horizon_mode = HorizonMode::Checkpoint;
  /// 0 uses the hardware concurrency.
  int workers = 0;

  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

}  // namespace hwmor
