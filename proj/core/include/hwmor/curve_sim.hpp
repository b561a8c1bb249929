#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "hwmor/market_data.hpp"

namespace hwmor {

/// Mean-corrected log returns, (n-1) x m.
struct ReturnMatrix {
  Eigen::MatrixXd values;
  Eigen::VectorXd column_means;
};

struct SimulationBasis {
  Eigen::VectorXd singular_values;  // descending
  Eigen::VectorXd energies;         // singular_values / sum, not squared
  Eigen::MatrixXd right_vectors;    // m x m
  int p_sim = 0;
  Eigen::MatrixXd projected_returns;  // M_R
};

struct YieldCurveSet {
  Eigen::MatrixXd curves;  // s x m
  TenorGrid grid;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  int p_sim = 0;
  Eigen::VectorXd energies;
};

ReturnMatrix log_returns(const RateHistory& shifted, ReturnFormula formula = ReturnFormula::LogRatio);

/// Smallest count whose cumulative energy reaches `level` (a fraction).
int components_for_energy(const Eigen::VectorXd& energies, double level);

/// p_sim == 0 picks components_for_energy(energies, 0.99).
SimulationBasis build_simulation_basis(const ReturnMatrix& returns, int p_sim);

/// Forward-rate adjustment per tenor from one curve: t0 = 0, t1 = previous tenor, t2 = this tenor.
Eigen::VectorXd forward_adjustment(const TenorGrid& grid, const Eigen::VectorXd& curve);

YieldCurveSet bootstrap_curves(const ShiftedHistory& history, const SimulationBasis& basis,
                               const PipelineConfig& config);

/// Shift, returns, basis and bootstrap in one call.
YieldCurveSet simulate_curves(const RateHistory& history, const PipelineConfig& config);

/// CSV with one curve per row plus `<path>.json` holding {seed, gamma, p_sim, energies}.
void write_curves(const YieldCurveSet& curves, const std::filesystem::path& path);
YieldCurveSet read_curves(const std::filesystem::path& path);

}  // namespace hwmor
