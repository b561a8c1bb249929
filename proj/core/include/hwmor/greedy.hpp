#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hwmor/calibration.hpp"
#include "hwmor/fdm.hpp"
#include "hwmor/rom.hpp"

namespace hwmor {

struct RomEvaluation {
  double epsilon = 0.0;
  Eigen::MatrixXd lifted;  // filled only when requested
};

/// What the greedy samplers need from a parametric model: full solves for
/// snapshots and reduced solves against the current basis.
class SnapshotProblem {
 public:
  virtual ~SnapshotProblem() = default;

  virtual std::size_t size() const = 0;
  /// One row of surrogate predictors per parameter group.
  virtual const Eigen::MatrixXd& design() const = 0;
  virtual Eigen::MatrixXd full_snapshots(std::size_t index) const = 0;
  virtual void set_basis(const Eigen::MatrixXd& Q) = 0;
  /// Must be safe to call concurrently once set_basis has returned.
  virtual RomEvaluation reduced(std::size_t index, bool lift) const = 0;
};

/// Hull-White pricing problem over a calibrated parameter space.
class HullWhiteProblem final : public SnapshotProblem {
 public:
  HullWhiteProblem(const ParameterSpace& space, InstrumentSpec spec, RateGrid grid, TimeAxis axis,
                   SolverSettings solver = {}, RomSettings rom = {});

  std::size_t size() const override { return space_.size(); }
  const Eigen::MatrixXd& design() const override { return space_.drifts; }
  Eigen::MatrixXd full_snapshots(std::size_t index) const override;
  void set_basis(const Eigen::MatrixXd& Q) override;
  RomEvaluation reduced(std::size_t index, bool lift) const override;

  const RateGrid& grid() const noexcept { return grid_; }
  const TimeAxis& axis() const noexcept { return axis_; }

 private:
  const ParameterSpace& space_;
  InstrumentSpec spec_;
  RateGrid grid_;
  TimeAxis axis_;
  SolverSettings solver_;
  RomSettings rom_;
  std::optional<RomModel> model_;
};

struct SurrogateModel {
  Eigen::VectorXd eta;  // standardized-scale coefficients; zero on dropped columns
  int kept_components = 0;
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;
  std::vector<Eigen::Index> dropped_columns;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& a) const;
};

/// Principal component regression of `eps` on the z-scored rows of `design`.
/// p is capped at min(rows - 1, kept columns, numerical rank).
SurrogateModel fit_pcr_surrogate(const Eigen::MatrixXd& design, const Eigen::VectorXd& eps, int p);
Eigen::VectorXd evaluate_surrogate(const SurrogateModel& model, const Eigen::MatrixXd& space);

/// Indices of the `count` largest predictions outside `exclude`; ties go to the lower index.
std::vector<std::size_t> top_candidates(const Eigen::VectorXd& predictions, std::size_t count,
                                        const std::vector<std::size_t>& exclude);

struct ErrorPoint {
  double error = 0.0;
  double estimator = 0.0;
};

/// log e = gamma log eps + log tau.
struct ErrorModel {
  double gamma = 0.0;
  double log_tau = 0.0;
  std::vector<ErrorPoint> points;
  bool fitted = false;

  double predict(double estimator) const { return std::exp(log_tau) * std::pow(estimator, gamma); }
};

ErrorModel fit_error_model(const std::vector<ErrorPoint>& points);

enum class TerminationReason { Tolerance, MaxIterations, Exhausted };

struct GreedyIteration {
  int iteration = 0;  // 1 is the first round evaluated against the one-snapshot basis
  std::optional<std::size_t> selected;
  double max_epsilon = 0.0;
  double mean_epsilon = 0.0;
  int d = 0;  // basis dimension used for the round
  std::size_t candidates = 0;
  int surrogate_rounds = 0;
  std::optional<double> predicted_error;
  std::optional<ErrorPoint> before;
  std::optional<ErrorPoint> after;
};

struct GreedyTrace {
  std::string strategy;
  std::vector<GreedyIteration> iterations;
  TerminationReason terminated_reason = TerminationReason::MaxIterations;
};

struct GreedyResult {
  ReducedBasis basis;
  GreedyTrace trace;
  ErrorModel error_model;
};

GreedyResult classical_greedy(SnapshotProblem& problem, const GreedyConfig& config, double energy_level,
                              std::uint64_t seed, unsigned workers = 1);
GreedyResult adaptive_greedy(SnapshotProblem& problem, const GreedyConfig& config, double energy_level,
                             std::uint64_t seed, unsigned workers = 1);

std::string to_string(TerminationReason reason);
nlohmann::json trace_to_json(const GreedyResult& result);
void write_trace(const GreedyResult& result, const std::filesystem::path& path);

}  // namespace hwmor
