#include "hwmor/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "hwmor/csv.hpp"
#include "hwmor/errors.hpp"
#include "json_enums.hpp"
#include "hwmor/parallel.hpp"

namespace hwmor {

void HullWhiteStatics::validate() const {
  if (!(b > 0.0)) fail(ErrorCode::InvalidArgument, "b must be positive");
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be nonnegative");
}

std::size_t drift_bucket(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  return static_cast<std::size_t>(it - times.begin());
}

double gamma_factor(double b, double tau) { return -std::expm1(-b * tau) / b; }

double gamma_square_integral(double b, double tau) {
  const double e1 = -std::expm1(-b * tau);
  const double e2 = -std::expm1(-2.0 * b * tau);
  return (tau - 2.0 * e1 / b + e2 / (2.0 * b)) / (b * b);
}

namespace {

// Integral of gamma_factor(b, T - v) for v in [lo, hi], hi <= T.
double bucket_integral(double b, double T, double lo, double hi) {
  if (hi <= lo) return 0.0;
  // e^{-b(T-hi)} - e^{-b(T-lo)} = e^{-b(T-hi)} (1 - e^{-b(hi-lo)})
  const double diff = std::exp(-b * (T - hi)) * -std::expm1(-b * (hi - lo));
  return ((hi - lo) - diff / b) / b;
}

}  // namespace

double bond_price_closed_form(const HullWhiteStatics& statics, const DriftVector& drift, double t, double T) {
  if (t > T) fail(ErrorCode::DomainError, "bond price needs t <= T");
  if (drift.values.size() != static_cast<Eigen::Index>(drift.times.size()) || drift.times.empty())
    fail(ErrorCode::InvalidArgument, "drift values and tenor times differ in length");
  const double b = statics.b;
  double lambda = 0.0;
  const std::size_t m = drift.times.size();
  for (std::size_t j = 0; j < m; ++j) {
    const double lo = std::max(t, j == 0 ? 0.0 : drift.times[j - 1]);
    const double hi = j + 1 == m ? T : std::min(T, drift.times[j]);
    lambda += drift.values(static_cast<Eigen::Index>(j)) * bucket_integral(b, T, lo, hi);
  }
  lambda -= 0.5 * statics.sigma * statics.sigma * gamma_square_integral(b, T - t);
  return std::exp(-statics.r0 * gamma_factor(b, T - t) - lambda);
}

CalibrationSystem assemble_calibration_system(const std::vector<double>& times, const Eigen::VectorXd& curve,
                                              const HullWhiteStatics& statics, YieldConvention convention) {
  statics.validate();
  const auto m = static_cast<Eigen::Index>(times.size());
  if (curve.size() != m) fail(ErrorCode::InvalidArgument, "curve length does not match tenor count");
  if (!curve.allFinite()) fail(ErrorCode::InvalidArgument, "curve has non-finite entries");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(times[static_cast<std::size_t>(i)] > (i == 0 ? 0.0 : times[static_cast<std::size_t>(i - 1)])))
      fail(ErrorCode::InvalidArgument, "calibration tenors must be positive and strictly increasing");

  const double b = statics.b;
  const double half_var = 0.5 * statics.sigma * statics.sigma;
  CalibrationSystem sys;
  sys.E = Eigen::MatrixXd::Zero(m, m);
  sys.F.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double Ti = times[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double lo = j == 0 ? 0.0 : times[static_cast<std::size_t>(j - 1)];
      sys.E(i, j) = bucket_integral(b, Ti, lo, times[static_cast<std::size_t>(j)]);
    }
    const double log_price = convention == YieldConvention::Annualized ? curve(i) * Ti : curve(i);
    sys.F(i) = log_price - statics.r0 * gamma_factor(b, Ti) + half_var * gamma_square_integral(b, Ti);
    if (std::abs(sys.E(i, i)) < 1e-14)
      fail(ErrorCode::SingularDiagonal, "calibration diagonal " + std::to_string(i + 1) + " vanishes");
  }
  return sys;
}

double default_tikhonov_mu(const Eigen::MatrixXd& E) { return 1e-8 * E.squaredNorm(); }

Eigen::VectorXd solve_tikhonov(const CalibrationSystem& system, double mu) {
  if (mu < 0.0) fail(ErrorCode::InvalidArgument, "Tikhonov parameter must be nonnegative");
  const auto& E = system.E;
  if (mu == 0.0) {
    for (Eigen::Index i = 0; i < E.rows(); ++i)
      if (std::abs(E(i, i)) < 1e-14)
        fail(ErrorCode::SingularDiagonal, "calibration diagonal " + std::to_string(i + 1) + " vanishes");
    return E.triangularView<Eigen::Lower>().solve(system.F);
  }
  const Eigen::Index m = E.cols();
  Eigen::MatrixXd normal = E.transpose() * E;
  normal.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) fail(ErrorCode::SolveFailure, "regularized normal equations not positive definite");
  Eigen::VectorXd a = llt.solve(E.transpose() * system.F);
  if (a.size() != m || !a.allFinite()) fail(ErrorCode::SolveFailure, "regularized solve produced non-finite drift");
  return a;
}

double discrepancy_mu(const CalibrationSystem& system, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::InvalidArgument, "discrepancy level must be positive");
  const double scale = system.E.squaredNorm();
  auto residual = [&](double log_mu) {
    const Eigen::VectorXd a = solve_tikhonov(system, std::exp(log_mu));
    return (system.E * a - system.F).norm();
  };
  double lo = std::log(1e-16 * scale);
  double hi = std::log(1e4 * scale);
  if (residual(lo) >= delta) return std::exp(lo);
  if (residual(hi) <= delta) return std::exp(hi);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) < delta ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

DriftVector calibrate_drift(const std::vector<double>& times, const Eigen::VectorXd& curve,
                            const HullWhiteStatics& statics, std::optional<double> mu, YieldConvention convention) {
  auto sys = assemble_calibration_system(times, curve, statics, convention);
  sys.mu = mu.value_or(default_tikhonov_mu(sys.E));
  DriftVector drift;
  drift.values = solve_tikhonov(sys, sys.mu);
  drift.times = times;
  return drift;
}

ParameterGroup ParameterSpace::group(std::size_t i) const {
  if (i >= size()) fail(ErrorCode::InvalidArgument, "parameter index out of range");
  ParameterGroup g;
  g.drift.values = drifts.row(static_cast<Eigen::Index>(i)).transpose();
  g.drift.times = grid.times;
  g.b = b;
  g.sigma = sigma;
  g.index = i;
  return g;
}

ParameterSpace calibrate_all(const YieldCurveSet& curves, const PipelineConfig& config) {
  const std::size_t m_all = curves.grid.size();
  const std::size_t m = config.calibration_tenors > 0 ? static_cast<std::size_t>(config.calibration_tenors) : m_all;
  if (m > m_all) fail(ErrorCode::InvalidArgument, "calibration_tenors exceeds the curve width");
  const TenorGrid grid = curves.grid.head(m);
  if (!(grid.times.front() > 0.0)) fail(ErrorCode::InvalidArgument, "calibration needs a positive first tenor");

  const auto s = static_cast<std::size_t>(curves.curves.rows());
  Eigen::MatrixXd drifts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m));
  std::vector<char> ok(s, 1);
  parallel_for(s, resolve_workers(config.workers), [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    HullWhiteStatics statics{config.statics.b, config.statics.sigma, curves.curves(row, 0)};
    try {
      const Eigen::VectorXd curve = curves.curves.row(row).head(static_cast<Eigen::Index>(m)).transpose();
      drifts.row(row) = calibrate_drift(grid.times, curve, statics, config.tikhonov_mu, config.yield_convention)
                            .values.transpose();
      if (!drifts.row(row).allFinite()) ok[i] = 0;
    } catch (const Error&) {
      ok[i] = 0;
    }
  });

  ParameterSpace space;
  space.grid = grid;
  space.b = config.statics.b;
  space.sigma = config.statics.sigma;
  space.mu = config.tikhonov_mu;
  space.convention = config.yield_convention;
  for (std::size_t i = 0; i < s; ++i)
    if (!ok[i]) space.failed_rows.push_back(i);
  if (space.failed_rows.size() * 100 > s)
    fail(ErrorCode::CalibrationFailure,
         std::to_string(space.failed_rows.size()) + " of " + std::to_string(s) + " curves failed to calibrate");

  const auto kept = static_cast<Eigen::Index>(s - space.failed_rows.size());
  space.drifts.resize(kept, static_cast<Eigen::Index>(m));
  space.spot_rates.resize(kept);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < s; ++i) {
    if (!ok[i]) continue;
    space.drifts.row(r) = drifts.row(static_cast<Eigen::Index>(i));
    space.spot_rates(r) = curves.curves(static_cast<Eigen::Index>(i), 0);
    ++r;
  }
  return space;
}

void write_parameter_space(const ParameterSpace& space, const std::filesystem::path& path) {
  csv::write_matrix(path, space.grid.labels, space.drifts);
  nlohmann::json side{
      {"b", space.b},
      {"sigma", space.sigma},
      {"mu", space.mu ? nlohmann::json(*space.mu) : nlohmann::json(nullptr)},
      {"yield_convention", space.convention},
      {"spot_rates", std::vector<double>(space.spot_rates.data(), space.spot_rates.data() + space.spot_rates.size())},
      {"failed_rows", space.failed_rows},
  };
  std::ofstream out(path.string() + ".json");
  if (!out) fail(ErrorCode::IoError, "cannot write sidecar for " + path.string());
  out << side.dump(2) << '\n';
}

ParameterSpace read_parameter_space(const std::filesystem::path& path) {
  auto table = csv::read_matrix(path);
  ParameterSpace space;
  space.grid = TenorGrid::from_labels(table.labels);
  space.drifts = std::move(table.values);
  std::ifstream side(path.string() + ".json");
  if (!side) fail(ErrorCode::IoError, "missing sidecar " + path.string() + ".json");
  try {
    nlohmann::json j;
    side >> j;
    space.b = j.at("b").get<double>();
    space.sigma = j.at("sigma").get<double>();
    if (j.contains("mu") && !j["mu"].is_null()) space.mu = j["mu"].get<double>();
    space.convention = j.value("yield_convention", YieldConvention::Annualized);
    const auto spots = j.value("spot_rates", std::vector<double>{});
    space.spot_rates = Eigen::Map<const Eigen::VectorXd>(spots.data(), static_cast<Eigen::Index>(spots.size()));
    space.failed_rows = j.value("failed_rows", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path.string() + ".json: " + e.what());
  }
  return space;
}

}  // namespace hwmor
