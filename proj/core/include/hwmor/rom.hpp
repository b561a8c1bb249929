#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hwmor/fdm.hpp"

namespace hwmor {

struct SvdResult {
  Eigen::MatrixXd U;
  Eigen::VectorXd S;  // descending
  Eigen::MatrixXd V;
};

/// Thin SVD; `rank` > 0 keeps only the leading singular triplets.
SvdResult truncated_svd(const Eigen::MatrixXd& X, Eigen::Index rank = 0);

/// HDM checkpoint columns stacked source by source.
struct SnapshotMatrix {
  Eigen::MatrixXd columns;
  std::vector<std::size_t> sources;
  Eigen::Index per_source = 0;

  void append(const HdmSolution& solution);
  void append(std::size_t source, const Eigen::MatrixXd& block);
  bool contains(std::size_t source) const;
};

struct ReducedBasis {
  Eigen::MatrixXd Q;  // M x d, orthonormal columns
  Eigen::VectorXd energies;
  int d = 0;
  double energy_level = 99.99;
  std::vector<std::size_t> sources;
  /// Hash of the parameter file the snapshots came from; empty when unknown.
  std::string params_hash;
};

/// Smallest j whose cumulative energy times 100 exceeds `energy_level`; all modes when none does.
int energy_dimension(const Eigen::VectorXd& energies, double energy_level);

ReducedBasis build_basis(const SnapshotMatrix& snapshots, double energy_level);

/// `.rob`: 8-byte little-endian header length, JSON header, then Q as little-endian
/// doubles in column-major order.
void write_basis(const ReducedBasis& basis, const std::filesystem::path& path);
ReducedBasis read_basis(const std::filesystem::path& path);

struct ReducedOperators {
  Eigen::MatrixXd A_d;
  Eigen::MatrixXd B_d;
};

ReducedOperators assemble_rom(const Tridiagonal& A, const Tridiagonal& B, const Eigen::MatrixXd& Q);
ReducedOperators assemble_rom(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q);

/// Basis-dependent data shared by every ROM solve with the same grid, statics,
/// instrument and time axis. The full operators depend on the drift only
/// through a and the upwind split point, so prefix sums over grid rows give the
/// reduced operators and the residual Gram matrix in O(d^2) per drift value.
class RomModel {
 public:
  RomModel(Eigen::MatrixXd Q, const RateGrid& grid, const InstrumentSpec& spec, const TimeAxis& axis, double b,
           double sigma, const SolverSettings& settings = {});

  Eigen::Index dimension() const noexcept { return Q_.cols(); }
  const Eigen::MatrixXd& basis() const noexcept { return Q_; }
  const TimeAxis& axis() const noexcept { return axis_; }
  const SolverSettings& settings() const noexcept { return settings_; }
  double b() const noexcept { return b_; }
  double sigma() const noexcept { return sigma_; }

  /// Q^T A Q and Q^T B Q for a step whose drift moves from a_now to a_next.
  ReducedOperators reduced_operators(double a_now, double a_next) const;

  /// G with ||A Q y_next - B Q y_now||^2 = z^T G z for z = [y_next; y_now].
  Eigen::MatrixXd residual_gram(double a_now, double a_next) const;

  const Eigen::VectorXd& initial_state() const noexcept { return y0_; }
  const Eigen::VectorXd& reduced_coupon() const noexcept { return coupon_d_; }

 private:
  Eigen::Index split(double a) const;
  Eigen::MatrixXd range(const std::vector<Eigen::MatrixXd>& prefix, Eigen::Index lo, Eigen::Index hi) const;
  Eigen::MatrixXd reduced_L(double a, Eigen::Index k) const;

  Eigen::MatrixXd Q_;
  Eigen::VectorXd points_;
  TimeAxis axis_;
  SolverSettings settings_;
  double b_ = 0.0;
  double sigma_ = 0.0;

  Eigen::MatrixXd K_interior_;
  Eigen::MatrixXd K_boundary_A_;
  Eigen::MatrixXd PP_boundary_;
  // prefix sums over rows [0, k), index 0 = positive convection region, 1 = negative
  std::vector<Eigen::MatrixXd> L0_[2], L1_[2];
  std::vector<Eigen::MatrixXd> PP_[2], PG_[2], GG_[2], QQ_[2], QG_[2];
  // cross terms by (A region, B region)
  std::vector<Eigen::MatrixXd> CPQ_[2][2], CPG_[2][2], CGQ_[2][2], CGG_[2][2];

  Eigen::VectorXd y0_;
  Eigen::VectorXd coupon_d_;
};

struct RomSettings {
  ResidualAggregation aggregation = ResidualAggregation::Max;
  /// Keeps every reduced state so the residual can be re-evaluated explicitly.
  bool keep_trajectory = false;
  /// Lifts every checkpoint to the full grid; otherwise only final_values is lifted.
  bool lift = true;
};

struct RomSolution {
  Eigen::MatrixXd reduced_checkpoints;  // d x checkpoint_count
  Eigen::MatrixXd lifted;               // M x checkpoint_count
  Eigen::VectorXd final_values;
  Eigen::VectorXd residual_norms;  // relative residual per step
  double epsilon = 0.0;
  Eigen::MatrixXd states;      // d x N, start of each step (kept on request)
  Eigen::MatrixXd pre_states;  // d x N, solve result before the coupon (kept on request)
};

RomSolution solve_rom(const RomModel& model, const ParameterGroup& rho, const RomSettings& settings = {});
RomSolution solve_rom(const InstrumentSpec& spec, const ParameterGroup& rho, const Eigen::MatrixXd& Q,
                      const RateGrid& grid, const TimeAxis& axis, const SolverSettings& solver = {},
                      const RomSettings& settings = {});

struct ResidualReport {
  double epsilon = 0.0;
  Eigen::VectorXd per_step;
  /// Largest ||Q^T R^n|| over the march.
  double max_galerkin = 0.0;
};

/// Explicit evaluation R^n = A Q y_pre^{n+1} - B Q y^n with the full operators.
ResidualReport residual_estimator(const OperatorSchedule& schedule, const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& states, const Eigen::MatrixXd& pre_states,
                                  ResidualAggregation aggregation = ResidualAggregation::Max);

double aggregate_residuals(const Eigen::VectorXd& per_step, ResidualAggregation aggregation);

/// ||V - V_bar||_F / ||V||_F over all checkpoints.
double relative_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& approximation);

}  // namespace hwmor
