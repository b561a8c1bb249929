#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hwmor/calibration.hpp"
#include "hwmor/fdm.hpp"
#include "hwmor/greedy.hpp"
#include "hwmor/rom.hpp"

namespace hwmor {

/// Linear interpolation of nodal values at r_sp; OutOfDomain outside the grid.
double extract_spot_value(const Eigen::Ref<const Eigen::VectorXd>& values, const RateGrid& grid, double r_sp);
double extract_spot_value(const HdmSolution& solution, const RateGrid& grid, double r_sp);
double extract_spot_value(const RomSolution& solution, const RateGrid& grid, double r_sp);

/// Nearest-rank percentile: sorted[ceil(q / 100 * s)] with 1-based ranks.
double nearest_rank(std::vector<double> values, double q);

struct ScenarioFigures {
  double favorable = 0.0;
  double moderate = 0.0;
  double unfavorable = 0.0;
};

ScenarioFigures percentile_scenarios(const std::vector<double>& values);

enum class Engine { Hdm, Rom };
std::string to_string(Engine engine);

struct ScenarioValues {
  Engine engine = Engine::Hdm;
  std::vector<double> horizons;  // years
  Eigen::MatrixXd values;        // s x horizons
  Eigen::VectorXd spot_rates;
  std::vector<std::size_t> groups;  // parameter-space rows priced
};

struct PricingRequest {
  InstrumentSpec spec;
  RateGrid grid;
  TimeAxis axis;
  SolverSettings solver;
  std::vector<double> horizons{5.0, 10.0};
  HorizonMode horizon_mode = HorizonMode::Checkpoint;
  int dt_days = 1;
  int checkpoint_days = 30;
};

/// Grid, time axis and solver settings from the pipeline config. Without a fixed
/// window the grid is centred on the mean spot rate of the space.
PricingRequest make_pricing_request(const PipelineConfig& config, const InstrumentSpec& spec,
                                    const ParameterSpace& space);

/// Prices rows `groups` of the space (all rows when empty) with the full solver or,
/// when `basis` is given, with the reduced model.
ScenarioValues price_scenarios(const ParameterSpace& space, const PricingRequest& request, Engine engine,
                               const Eigen::MatrixXd* basis = nullptr, std::vector<std::size_t> groups = {},
                               unsigned workers = 1);

void write_scenario_values(const ScenarioValues& values, const std::filesystem::path& path);

struct HorizonFigures {
  std::string label;
  double years = 0.0;
  ScenarioFigures figures;
};

struct ScenarioReport {
  Engine engine = Engine::Hdm;
  std::size_t scenarios = 0;
  std::array<int, 3> percentile_ranks{90, 50, 10};
  std::vector<HorizonFigures> horizons;
  nlohmann::json metadata = nlohmann::json::object();
};

ScenarioReport build_report(const ScenarioValues& values);
nlohmann::json report_to_json(const ScenarioReport& report);
/// Plain-text table with one row per scenario and one column per horizon.
std::string format_report(const ScenarioReport& report);

struct SolveTiming {
  std::size_t solves = 0;     // solves actually timed
  std::size_t scenarios = 0;  // solves the total refers to
  double per_solve = 0.0;     // seconds
  double total = 0.0;         // seconds
  bool extrapolated = false;
};

struct StrategyTiming {
  std::string strategy;
  double reduction_time = 0.0;  // T_Q, seconds
  int d = 0;
  std::size_t snapshots = 0;
  SolveTiming rom;
  double per_solve_ratio = 0.0;  // HDM per-solve / ROM per-solve
  double speedup = 0.0;          // HDM total / (T_Q + ROM total)
};

struct BenchmarkOptions {
  std::size_t scenarios = 0;   // 0: whole space
  std::size_t hdm_sample = 0;  // 0: time every scenario
  int repeats = 3;
  std::vector<std::string> strategies{"classical", "adaptive"};
  unsigned workers = 1;
};

struct BenchmarkReport {
  std::size_t scenarios = 0;
  Eigen::Index grid_points = 0;
  int steps = 0;
  int repeats = 0;
  SolveTiming hdm;
  std::vector<StrategyTiming> strategies;
};

/// Wall-clock timings, median over `repeats` runs for the solve batches.
BenchmarkReport run_benchmark(const ParameterSpace& space, const PricingRequest& request,
                              const PipelineConfig& config, const BenchmarkOptions& options);
nlohmann::json benchmark_to_json(const BenchmarkReport& report);

}  // namespace hwmor
