#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hwmor/calibration.hpp"
#include "hwmor/curve_sim.hpp"
#include "hwmor/fdm.hpp"
#include "hwmor/greedy.hpp"
#include "hwmor/market_data.hpp"
#include "hwmor/report.hpp"
#include "hwmor/synthetic.hpp"

#ifndef HWMOR_CONFIG_DIR
#error "HWMOR_CONFIG_DIR must point at the configs/ directory"
#endif

namespace hwmor::fixture {

inline std::filesystem::path config_dir() { return HWMOR_CONFIG_DIR; }

/// Defaults overlaid with configs/fixture.json.
inline PipelineConfig fixture_config() { return load_config(config_dir() / "fixture.json"); }

inline InstrumentSpec floater() { return load_instrument(config_dir() / "floater.json"); }

/// Synthetic history -> simulated curves -> calibrated space, plus the pricing setup.
struct Fixture {
  PipelineConfig config;
  InstrumentSpec spec;
  RateHistory history;
  YieldCurveSet curves;
  ParameterSpace space;
  PricingRequest request;
};

inline Fixture make_fixture(int scenarios = 0, unsigned workers = 1) {
  Fixture f;
  f.config = fixture_config();
  if (scenarios > 0) f.config.bootstrap_count = scenarios;
  f.config.workers = static_cast<int>(workers);
  f.spec = floater();
  f.history = synthetic_history();
  f.curves = simulate_curves(f.history, f.config);
  f.space = calibrate_all(f.curves, f.config);
  f.request = make_pricing_request(f.config, f.spec, f.space);
  return f;
}

inline HullWhiteProblem make_problem(const Fixture& f) {
  RomSettings rom;
  rom.aggregation = f.config.greedy.residual_aggregation;
  return HullWhiteProblem(f.space, f.spec, f.request.grid, f.request.axis, f.request.solver, rom);
}

/// Scratch directory under the system temp dir, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hwmor_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hwmor::fixture
