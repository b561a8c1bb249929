#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hwmor/curve_sim.hpp"
#include "hwmor/market_data.hpp"

namespace hwmor {

struct HullWhiteStatics {
  double b = 0.015;
  double sigma = 0.006;
  double r0 = 0.0;

  void validate() const;
};

/// Bucket index i with t in (T_{i-1}, T_i], T_0 = 0. t <= 0 maps to the first
/// bucket and t beyond the last tenor to the last one.
std::size_t drift_bucket(const std::vector<double>& times, double t);

/// Piecewise-constant drift a(t), one value per tenor bucket.
struct DriftVector {
  Eigen::VectorXd values;
  std::vector<double> times;

  double at(double t) const { return values(static_cast<Eigen::Index>(drift_bucket(times, t))); }
};

/// rho = {a(t), b, sigma} with its row index in the parameter space.
struct ParameterGroup {
  DriftVector drift;
  double b = 0.015;
  double sigma = 0.006;
  std::size_t index = 0;
};

/// (1 - e^{-b tau}) / b.
double gamma_factor(double b, double tau);

/// Integral over [0, tau] of gamma_factor(b, u)^2.
double gamma_square_integral(double b, double tau);

/// Zero-coupon bond price exp(-r0 Gamma(t,T) - Lambda(t,T)) with r(t) = statics.r0.
double bond_price_closed_form(const HullWhiteStatics& statics, const DriftVector& drift, double t, double T);

struct CalibrationSystem {
  Eigen::MatrixXd E;  // lower triangular
  Eigen::VectorXd F;
  double mu = 0.0;
};

CalibrationSystem assemble_calibration_system(const std::vector<double>& times, const Eigen::VectorXd& curve,
                                              const HullWhiteStatics& statics,
                                              YieldConvention convention = YieldConvention::Annualized);

/// 1e-8 * ||E||_F^2.
double default_tikhonov_mu(const Eigen::MatrixXd& E);

/// Minimizes ||E a - F||^2 + mu ||a||^2. mu == 0 uses forward substitution.
Eigen::VectorXd solve_tikhonov(const CalibrationSystem& system, double mu);

/// mu with ||E a_mu - F|| = delta, found by bisection in log mu.
double discrepancy_mu(const CalibrationSystem& system, double delta);

DriftVector calibrate_drift(const std::vector<double>& times, const Eigen::VectorXd& curve,
                            const HullWhiteStatics& statics, std::optional<double> mu,
                            YieldConvention convention = YieldConvention::Annualized);

/// Drift matrix over all scenarios plus the shared statics.
struct ParameterSpace {
  Eigen::MatrixXd drifts;  // s x m
  TenorGrid grid;
  double b = 0.015;
  double sigma = 0.006;
  std::optional<double> mu;
  YieldConvention convention = YieldConvention::Annualized;
  /// r0 used for each row (the first-tenor yield of its curve).
  Eigen::VectorXd spot_rates;
  /// Curve rows that failed to calibrate and were left out.
  std::vector<std::size_t> failed_rows;

  std::size_t size() const noexcept { return static_cast<std::size_t>(drifts.rows()); }
  ParameterGroup group(std::size_t i) const;
};

/// Calibrates every curve on the first `config.calibration_tenors` tenors (all when 0).
/// Aborts with CalibrationFailure when more than 1 % of rows fail.
ParameterSpace calibrate_all(const YieldCurveSet& curves, const PipelineConfig& config);

/// CSV of drifts plus `<path>.json` holding {b, sigma, mu, yield_convention, spot_rates}.
void write_parameter_space(const ParameterSpace& space, const std::filesystem::path& path);
ParameterSpace read_parameter_space(const std::filesystem::path& path);

}  // namespace hwmor
