#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hwmor/calibration.hpp"
#include "hwmor/market_data.hpp"
#include "hwmor/tridiagonal.hpp"

namespace hwmor {

/// Equidistant short-rate nodes on [lo, hi].
struct RateGrid {
  Eigen::VectorXd points;
  double u = 0.0;  // r_sp + 7 sigma sqrt(T), or the window top
  double v = 0.0;  // r_sp - 7 sigma sqrt(T), or the window bottom
  double dx = 0.0;

  Eigen::Index size() const noexcept { return points.size(); }
  double lo() const noexcept { return points(0); }
  double hi() const noexcept { return points(points.size() - 1); }
};

RateGrid uniform_rate_grid(double lo, double hi, int M);

/// Domain r_sp -+ 7 sigma sqrt(T), or `window` when given.
RateGrid build_rate_grid(const HullWhiteStatics& statics, double r_sp, double T, int M,
                         std::optional<std::pair<double, double>> window = std::nullopt);

enum class InstrumentKind { ZeroCouponBond, CappedFlooredFloater };

struct InstrumentSpec {
  InstrumentKind kind = InstrumentKind::CappedFlooredFloater;
  double nominal = 1.0;
  double maturity = 10.0;
  int coupon_frequency = 4;
  double cap_rate = 0.0225;
  double floor_rate = 0.005;
  std::string reference_tenor = "3M";

  void validate() const;
};

InstrumentSpec load_instrument(const std::filesystem::path& path);
void save_instrument(const InstrumentSpec& spec, const std::filesystem::path& path);
void to_json(nlohmann::json& j, const InstrumentSpec& spec);
void from_json(const nlohmann::json& j, InstrumentSpec& spec);

/// Uniform march over [0, T] with coupon and checkpoint strides in steps.
struct TimeAxis {
  double maturity = 0.0;
  int steps = 0;
  double dt = 0.0;
  int coupon_every = 0;  // 0: no coupons
  int checkpoint_every = 1;

  double time(int n) const noexcept { return n * dt; }
  bool is_coupon_step(int n) const noexcept { return coupon_every > 0 && n > 0 && n % coupon_every == 0; }
  int checkpoint_count() const noexcept { return steps / checkpoint_every + 1; }
  /// Checkpoint column holding the state at time t; ScheduleMismatch when t is not on a checkpoint.
  int checkpoint_at(double t) const;

  static TimeAxis uniform(double maturity, int steps, int coupon_every, int checkpoint_every);
};

/// Daily steps of dt_days / 360 years. Coupon and checkpoint dates must fall on steps.
TimeAxis make_time_axis(const InstrumentSpec& spec, int dt_days, int checkpoint_days);

/// Spatial operator L for one drift value: central diffusion, one-sided convection
/// (backward difference where a - b r > 0, forward otherwise) and reaction -r.
Tridiagonal spatial_operator(const RateGrid& grid, double a, double b, double sigma);

struct OperatorPair {
  Tridiagonal A;  // boundary rows (-1, 1) and (1, -1)
  Tridiagonal B;  // boundary rows zero
};

/// Replaces the first and last rows of A by the Neumann closures and zeroes the
/// matching right-hand-side entries.
void apply_boundary_conditions(Tridiagonal& A, Eigen::VectorXd& rhs);
void apply_boundary_conditions(Tridiagonal& A, Tridiagonal& B);

/// A = I - theta dt L(a_next), B = I + (1 - theta) dt L(a_now), boundary rows applied.
OperatorPair assemble_operators(const RateGrid& grid, double a_now, double a_next, double b, double sigma, double dt,
                                double theta);
OperatorPair assemble_operators(const RateGrid& grid, const ParameterGroup& rho, double t, double dt, double theta);

/// V^{n+1} = A^{-1} (B V^n), then the coupon is added when given.
Eigen::VectorXd step(const ThomasFactor& A, const Tridiagonal& B, const Eigen::VectorXd& V,
                     const Eigen::VectorXd* coupon = nullptr);

/// Per-node coupon nominal / frequency * min(C_R, max(F_R, r_i)); zero for bonds.
Eigen::VectorXd coupon_vector(const InstrumentSpec& spec, const RateGrid& grid);

/// Operator pairs for one parameter group over a time axis. Drift buckets are
/// piecewise constant, so only the distinct (bucket now, bucket next) pairs are
/// assembled and factored.
class OperatorSchedule {
 public:
  OperatorSchedule(const RateGrid& grid, const ParameterGroup& rho, const TimeAxis& axis, double theta,
                   MarchDirection march = MarchDirection::Forward);

  std::size_t pair_count() const noexcept { return pairs_.size(); }
  std::size_t pair_of_step(int n) const { return step_pair_[static_cast<std::size_t>(n)]; }
  const OperatorPair& pair(std::size_t p) const { return pairs_[p]; }
  const ThomasFactor& factor(std::size_t p) const { return factors_[p]; }
  /// Bucket indices (now, next) behind pair p.
  std::pair<std::size_t, std::size_t> buckets(std::size_t p) const { return keys_[p]; }

 private:
  std::vector<OperatorPair> pairs_;
  std::vector<ThomasFactor> factors_;
  std::vector<std::pair<std::size_t, std::size_t>> keys_;
  std::vector<std::size_t> step_pair_;
};

struct HdmSolution {
  Eigen::MatrixXd checkpoints;  // M x checkpoint_count
  Eigen::VectorXd final_values;
  TimeAxis axis;
  std::size_t parameter_index = 0;
};

struct SolverSettings {
  double theta = 0.5;
  MarchDirection march = MarchDirection::Forward;
};

HdmSolution price_instrument(const InstrumentSpec& spec, const ParameterGroup& rho, const RateGrid& grid,
                             const TimeAxis& axis, const SolverSettings& settings = {});

}  // namespace hwmor
