#include "hwmor/curve_sim.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hwmor/csv.hpp"
#include "hwmor/errors.hpp"
#include "hwmor/parallel.hpp"
#include "hwmor/random.hpp"

namespace hwmor {

ReturnMatrix log_returns(const RateHistory& shifted, ReturnFormula formula) {
  const Eigen::MatrixXd& d = shifted.rates;
  if (d.rows() < 2) fail(ErrorCode::InvalidArgument, "log returns need at least 2 observations");
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (!(d(i, j) > 0.0))
        fail(ErrorCode::NonPositiveRate,
             "rate at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) + " is not positive");

  ReturnMatrix out;
  const Eigen::MatrixXd logs = d.array().log().matrix();
  const Eigen::Index n = d.rows() - 1;
  if (formula == ReturnFormula::LogRatio)
    out.values = logs.bottomRows(n) - logs.topRows(n);
  else
    out.values = (logs.bottomRows(n).array() / logs.topRows(n).array()).matrix();
  out.column_means = out.values.colwise().mean().transpose();
  out.values.rowwise() -= out.column_means.transpose();
  return out;
}

int components_for_energy(const Eigen::VectorXd& energies, double level) {
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    cumulative += energies(i);
    if (cumulative >= level - 1e-15) return static_cast<int>(i + 1);
  }
  return static_cast<int>(energies.size());
}

SimulationBasis build_simulation_basis(const ReturnMatrix& returns, int p_sim) {
  const Eigen::MatrixXd& x = returns.values;
  const auto m = static_cast<int>(x.cols());
  if (p_sim < 0 || p_sim > m) fail(ErrorCode::InvalidArgument, "p_sim must lie in [1, m]");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
  SimulationBasis basis;
  basis.singular_values = Eigen::VectorXd::Zero(m);
  basis.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  const double total = basis.singular_values.sum();
  if (!(total > 0.0)) fail(ErrorCode::RankDeficient, "return matrix has no nonzero singular value");
  basis.energies = basis.singular_values / total;
  basis.right_vectors = svd.matrixV();
  basis.p_sim = p_sim == 0 ? components_for_energy(basis.energies, 0.99) : p_sim;

  const auto psi = basis.right_vectors.leftCols(basis.p_sim);
  basis.projected_returns = (x * psi) * psi.transpose();
  return basis;
}

Eigen::VectorXd forward_adjustment(const TenorGrid& grid, const Eigen::VectorXd& curve) {
  Eigen::VectorXd fwd(curve.size());
  for (Eigen::Index j = 0; j < curve.size(); ++j) {
    const double t2 = grid.times[static_cast<std::size_t>(j)];
    const double t1 = j == 0 ? 0.0 : grid.times[static_cast<std::size_t>(j - 1)];
    const double r1 = j == 0 ? 0.0 : curve(j - 1);
    fwd(j) = t2 > t1 ? (curve(j) * t2 - r1 * t1) / (t2 - t1) : curve(j);
  }
  return fwd;
}

YieldCurveSet bootstrap_curves(const ShiftedHistory& history, const SimulationBasis& basis,
                               const PipelineConfig& config) {
  const auto s = config.bootstrap_count;
  const auto h = config.holding_period_days;
  if (s < 1 || h < 1) fail(ErrorCode::InvalidArgument, "bootstrap needs s >= 1 and h >= 1");
  const Eigen::MatrixXd& mr = basis.projected_returns;
  const Eigen::Index m = mr.cols();
  if (m != history.shifted.tenors()) fail(ErrorCode::InvalidArgument, "basis and history tenor counts differ");

  const Eigen::RowVectorXd last_shifted = history.shifted.rates.bottomRows(1);
  Eigen::RowVectorXd offset = Eigen::RowVectorXd::Constant(m, -history.gamma);
  if (config.forward_adjustment) {
    const Eigen::VectorXd last = last_shifted.transpose().array() - history.gamma;
    offset += forward_adjustment(history.shifted.grid, last).transpose();
  }

  YieldCurveSet out;
  out.grid = history.shifted.grid;
  out.seed = config.seed;
  out.gamma = history.gamma;
  out.p_sim = basis.p_sim;
  out.energies = basis.energies;
  out.curves.resize(s, m);
  const auto rows = static_cast<std::uint64_t>(mr.rows());
  parallel_for(static_cast<std::size_t>(s), resolve_workers(config.workers), [&](std::size_t trial) {
    auto rng = make_stream(config.seed, trial);
    Eigen::RowVectorXd chi = Eigen::RowVectorXd::Zero(m);
    for (int k = 0; k < h; ++k) chi += mr.row(static_cast<Eigen::Index>(uniform_index(rng, rows)));
    out.curves.row(static_cast<Eigen::Index>(trial)) = last_shifted.array() * chi.array().exp() + offset.array();
  });
  if (!out.curves.allFinite()) fail(ErrorCode::SolveFailure, "bootstrap produced non-finite rates");
  return out;
}

YieldCurveSet simulate_curves(const RateHistory& history, const PipelineConfig& config) {
  history.validate();
  const auto shifted = positivity_shift(history, config.shift_epsilon);
  const auto returns = log_returns(shifted.shifted, config.return_formula);
  const auto basis = build_simulation_basis(returns, config.pca_components);
  return bootstrap_curves(shifted, basis, config);
}

void write_curves(const YieldCurveSet& curves, const std::filesystem::path& path) {
  csv::write_matrix(path, curves.grid.labels, curves.curves);
  nlohmann::json side{{"seed", curves.seed},
                      {"gamma", curves.gamma},
                      {"p_sim", curves.p_sim},
                      {"energies", std::vector<double>(curves.energies.data(),
                                                       curves.energies.data() + curves.energies.size())}};
  std::ofstream out(path.string() + ".json");
  if (!out) fail(ErrorCode::IoError, "cannot write sidecar for " + path.string());
  out << side.dump(2) << '\n';
}

YieldCurveSet read_curves(const std::filesystem::path& path) {
  auto table = csv::read_matrix(path);
  YieldCurveSet out;
  out.grid = TenorGrid::from_labels(table.labels);
  out.curves = std::move(table.values);
  std::ifstream side(path.string() + ".json");
  if (side) {
    nlohmann::json j;
    try {
      side >> j;
      out.seed = j.value("seed", std::uint64_t{0});
      out.gamma = j.value("gamma", 0.0);
      out.p_sim = j.value("p_sim", 0);
      const auto e = j.value("energies", std::vector<double>{});
      out.energies = Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidArgument, path.string() + ".json: " + e.what());
    }
  }
  return out;
}

}  // namespace hwmor
