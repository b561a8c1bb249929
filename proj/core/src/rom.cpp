#include "hwmor/rom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "hwmor/errors.hpp"

namespace hwmor {

SvdResult truncated_svd(const Eigen::MatrixXd& X, Eigen::Index rank) {
  if (X.size() == 0) fail(ErrorCode::InvalidArgument, "SVD of an empty matrix");
  if (!X.allFinite()) fail(ErrorCode::ConvergenceFailure, "SVD input has non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorCode::ConvergenceFailure, "SVD did not converge");
  const Eigen::Index k = rank > 0 ? std::min(rank, svd.singularValues().size()) : svd.singularValues().size();
  return {svd.matrixU().leftCols(k), svd.singularValues().head(k), svd.matrixV().leftCols(k)};
}

void SnapshotMatrix::append(const HdmSolution& solution) { append(solution.parameter_index, solution.checkpoints); }

void SnapshotMatrix::append(std::size_t source, const Eigen::MatrixXd& block) {
  if (contains(source)) fail(ErrorCode::InvalidArgument, "parameter group " + std::to_string(source) + " already sampled");
  if (columns.size() == 0) {
    per_source = block.cols();
    columns = block;
  } else {
    if (block.rows() != columns.rows() || block.cols() != per_source)
      fail(ErrorCode::InvalidArgument, "snapshot block shape differs from earlier blocks");
    columns.conservativeResize(Eigen::NoChange, columns.cols() + block.cols());
    columns.rightCols(block.cols()) = block;
  }
  sources.push_back(source);
}

bool SnapshotMatrix::contains(std::size_t source) const {
  return std::find(sources.begin(), sources.end(), source) != sources.end();
}

int energy_dimension(const Eigen::VectorXd& energies, double energy_level) {
  double cumulative = 0.0;
  for (Eigen::Index j = 0; j < energies.size(); ++j) {
    cumulative += energies(j);
    if (cumulative * 100.0 > energy_level) return static_cast<int>(j + 1);
  }
  return static_cast<int>(energies.size());
}

ReducedBasis build_basis(const SnapshotMatrix& snapshots, double energy_level) {
  if (!(energy_level > 0.0 && energy_level <= 100.0)) fail(ErrorCode::InvalidArgument, "energy level must lie in (0, 100]");
  const auto svd = truncated_svd(snapshots.columns);
  const double total = svd.S.sum();
  if (!(total > 0.0)) fail(ErrorCode::RankDeficient, "snapshot matrix is zero");
  ReducedBasis basis;
  basis.energies = svd.S / total;
  basis.d = energy_dimension(basis.energies, energy_level);
  basis.Q = svd.U.leftCols(basis.d);
  basis.energy_level = energy_level;
  basis.sources = snapshots.sources;
  return basis;
}

namespace {

void write_le_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_le_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) fail(ErrorCode::IoError, "truncated basis header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_basis(const ReducedBasis& basis, const std::filesystem::path& path) {
  nlohmann::json header{
      {"format", "hwmor-rob"},
      {"version", 1},
      {"M", basis.Q.rows()},
      {"d", basis.Q.cols()},
      {"energy_level", basis.energy_level},
      {"energies", std::vector<double>(basis.energies.data(), basis.energies.data() + basis.energies.size())},
      {"sources", basis.sources},
      {"params_hash", basis.params_hash},
  };
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_le_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < basis.Q.size(); ++i) write_le_u64(out, std::bit_cast<std::uint64_t>(basis.Q.data()[i]));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

ReducedBasis read_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open basis " + path.string());
  const std::uint64_t length = read_le_u64(in);
  if (length > (1u << 30)) fail(ErrorCode::IoError, path.string() + ": implausible header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) fail(ErrorCode::IoError, "truncated basis header");
  ReducedBasis basis;
  Eigen::Index M = 0;
  Eigen::Index d = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.value("format", "") != "hwmor-rob") fail(ErrorCode::IoError, path.string() + " is not a basis file");
    M = header.at("M").get<Eigen::Index>();
    d = header.at("d").get<Eigen::Index>();
    basis.energy_level = header.at("energy_level").get<double>();
    const auto e = header.at("energies").get<std::vector<double>>();
    basis.energies = Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
    basis.sources = header.at("sources").get<std::vector<std::size_t>>();
    basis.params_hash = header.value("params_hash", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  basis.d = static_cast<int>(d);
  basis.Q.resize(M, d);
  for (Eigen::Index i = 0; i < M * d; ++i) basis.Q.data()[i] = std::bit_cast<double>(read_le_u64(in));
  return basis;
}

ReducedOperators assemble_rom(const Tridiagonal& A, const Tridiagonal& B, const Eigen::MatrixXd& Q) {
  if (Q.rows() != A.size() || B.size() != A.size()) fail(ErrorCode::InvalidArgument, "basis and operator sizes differ");
  return {Q.transpose() * A.apply(Q), Q.transpose() * B.apply(Q)};
}

ReducedOperators assemble_rom(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q) {
  if (Q.rows() != A.rows() || A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != A.cols())
    fail(ErrorCode::InvalidArgument, "basis and operator sizes differ");
  return {Q.transpose() * A * Q, Q.transpose() * B * Q};
}

// ---------------------------------------------------------------------------
// RomModel

namespace {

struct RowStencil {
  double l0[3];
  double l1[3];
};

// Interior row of L split as l0 + a * l1 on the positive (backward difference)
// or nonpositive (forward difference) convection branch.
RowStencil stencil(double r, double b, double D, double h, bool positive) {
  if (positive) return {{D + b * r * h, -2.0 * D - r - b * r * h, D}, {-h, h, 0.0}};
  return {{D, -2.0 * D - r + b * r * h, D - b * r * h}, {0.0, -h, h}};
}

std::vector<Eigen::MatrixXd> zero_prefix(Eigen::Index rows, Eigen::Index d) {
  return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(rows + 1), Eigen::MatrixXd::Zero(d, d));
}

}  // namespace

RomModel::RomModel(Eigen::MatrixXd Q, const RateGrid& grid, const InstrumentSpec& spec, const TimeAxis& axis,
                   double b, double sigma, const SolverSettings& settings)
    : Q_(std::move(Q)), points_(grid.points), axis_(axis), settings_(settings), b_(b), sigma_(sigma) {
  const Eigen::Index M = grid.size();
  const Eigen::Index d = Q_.cols();
  if (Q_.rows() != M) fail(ErrorCode::InvalidArgument, "basis rows do not match the rate grid");
  if (d < 1) fail(ErrorCode::InvalidArgument, "basis has no columns");
  if (b < 0.0) fail(ErrorCode::InvalidArgument, "reduced model needs b >= 0");

  const double theta = settings.theta;
  const double dt = axis.dt;
  const double D = 0.5 * sigma * sigma / (grid.dx * grid.dx);
  const double h = 1.0 / grid.dx;

  for (int g = 0; g < 2; ++g) {
    L0_[g] = L1_[g] = PP_[g] = PG_[g] = GG_[g] = QQ_[g] = QG_[g] = zero_prefix(M, d);
    for (int k = 0; k < 2; ++k) CPQ_[g][k] = CPG_[g][k] = CGQ_[g][k] = CGG_[g][k] = zero_prefix(M, d);
  }
  K_interior_ = Eigen::MatrixXd::Zero(d, d);

  Eigen::RowVectorXd P[2], Qb[2], G[2];
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto next = static_cast<std::size_t>(i + 1);
    const auto cur = static_cast<std::size_t>(i);
    const bool interior = i > 0 && i + 1 < M;
    for (int g = 0; g < 2; ++g) {
      L0_[g][next] = L0_[g][cur];
      L1_[g][next] = L1_[g][cur];
      PP_[g][next] = PP_[g][cur];
      PG_[g][next] = PG_[g][cur];
      GG_[g][next] = GG_[g][cur];
      QQ_[g][next] = QQ_[g][cur];
      QG_[g][next] = QG_[g][cur];
      for (int k = 0; k < 2; ++k) {
        CPQ_[g][k][next] = CPQ_[g][k][cur];
        CPG_[g][k][next] = CPG_[g][k][cur];
        CGQ_[g][k][next] = CGQ_[g][k][cur];
        CGG_[g][k][next] = CGG_[g][k][cur];
      }
    }
    if (!interior) continue;

    const auto qi = Q_.row(i);
    K_interior_.noalias() += qi.transpose() * qi;
    for (int g = 0; g < 2; ++g) {
      const RowStencil s = stencil(points_(i), b, D, h, g == 0);
      const Eigen::RowVectorXd LQ0 = s.l0[0] * Q_.row(i - 1) + s.l0[1] * qi + s.l0[2] * Q_.row(i + 1);
      G[g] = s.l1[0] * Q_.row(i - 1) + s.l1[1] * qi + s.l1[2] * Q_.row(i + 1);
      P[g] = qi - theta * dt * LQ0;
      Qb[g] = qi + (1.0 - theta) * dt * LQ0;

      L0_[g][next].noalias() += qi.transpose() * LQ0;
      L1_[g][next].noalias() += qi.transpose() * G[g];
      PP_[g][next].noalias() += P[g].transpose() * P[g];
      PG_[g][next].noalias() += P[g].transpose() * G[g] + G[g].transpose() * P[g];
      GG_[g][next].noalias() += G[g].transpose() * G[g];
      QQ_[g][next].noalias() += Qb[g].transpose() * Qb[g];
      QG_[g][next].noalias() += Qb[g].transpose() * G[g] + G[g].transpose() * Qb[g];
    }
    for (int ga = 0; ga < 2; ++ga)
      for (int gb = 0; gb < 2; ++gb) {
        CPQ_[ga][gb][next].noalias() += P[ga].transpose() * Qb[gb];
        CPG_[ga][gb][next].noalias() += P[ga].transpose() * G[gb];
        CGQ_[ga][gb][next].noalias() += G[ga].transpose() * Qb[gb];
        CGG_[ga][gb][next].noalias() += G[ga].transpose() * G[gb];
      }
  }

  // Neumann rows of A; the matching rows of B are zero.
  const Eigen::RowVectorXd top = Q_.row(1) - Q_.row(0);
  const Eigen::RowVectorXd bottom = Q_.row(M - 2) - Q_.row(M - 1);
  K_boundary_A_ = Q_.row(0).transpose() * top + Q_.row(M - 1).transpose() * bottom;
  PP_boundary_ = top.transpose() * top + bottom.transpose() * bottom;

  y0_ = Q_.transpose() * Eigen::VectorXd::Constant(M, spec.nominal);
  coupon_d_ = Q_.transpose() * coupon_vector(spec, grid);
}

Eigen::Index RomModel::split(double a) const {
  const double* begin = points_.data();
  const double* end = begin + points_.size();
  return std::partition_point(begin, end, [&](double r) { return a - b_ * r > 0.0; }) - begin;
}

Eigen::MatrixXd RomModel::range(const std::vector<Eigen::MatrixXd>& prefix, Eigen::Index lo, Eigen::Index hi) const {
  return prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
}

Eigen::MatrixXd RomModel::reduced_L(double a, Eigen::Index k) const {
  const Eigen::Index M = points_.size();
  return range(L0_[0], 0, k) + range(L0_[1], k, M) + a * (range(L1_[0], 0, k) + range(L1_[1], k, M));
}

ReducedOperators RomModel::reduced_operators(double a_now, double a_next) const {
  const double theta = settings_.theta;
  const double dt = axis_.dt;
  ReducedOperators out;
  out.A_d = K_interior_ - theta * dt * reduced_L(a_next, split(a_next)) + K_boundary_A_;
  out.B_d = K_interior_ + (1.0 - theta) * dt * reduced_L(a_now, split(a_now));
  return out;
}

Eigen::MatrixXd RomModel::residual_gram(double a_now, double a_next) const {
  const Eigen::Index M = points_.size();
  const Eigen::Index d = Q_.cols();
  const double alpha = -settings_.theta * axis_.dt * a_next;
  const double beta = (1.0 - settings_.theta) * axis_.dt * a_now;
  const Eigen::Index kA = split(a_next);
  const Eigen::Index kB = split(a_now);

  auto regional = [&](const std::vector<Eigen::MatrixXd>(&arr)[2], Eigen::Index k) {
    return Eigen::MatrixXd(range(arr[0], 0, k) + range(arr[1], k, M));
  };
  auto crossed = [&](const std::vector<Eigen::MatrixXd>(&arr)[2][2]) {
    const Eigen::Index lo = std::min(kA, kB);
    const Eigen::Index hi = std::max(kA, kB);
    Eigen::MatrixXd out = range(arr[0][0], 0, lo) + range(arr[1][1], hi, M);
    if (kA < kB) out += range(arr[1][0], kA, kB);
    else if (kB < kA) out += range(arr[0][1], kB, kA);
    return out;
  };

  const Eigen::MatrixXd TL =
      PP_boundary_ + regional(PP_, kA) + alpha * regional(PG_, kA) + alpha * alpha * regional(GG_, kA);
  const Eigen::MatrixXd BR = regional(QQ_, kB) + beta * regional(QG_, kB) + beta * beta * regional(GG_, kB);
  const Eigen::MatrixXd C = crossed(CPQ_) + beta * crossed(CPG_) + alpha * crossed(CGQ_) + alpha * beta * crossed(CGG_);

  Eigen::MatrixXd gram(2 * d, 2 * d);
  gram.topLeftCorner(d, d) = TL;
  gram.topRightCorner(d, d) = -C;
  gram.bottomLeftCorner(d, d) = -C.transpose();
  gram.bottomRightCorner(d, d) = BR;
  return gram;
}

// ---------------------------------------------------------------------------
// reduced march

namespace {

std::vector<std::size_t> step_buckets(const std::vector<double>& times, const TimeAxis& axis, MarchDirection march) {
  std::vector<std::size_t> buckets(static_cast<std::size_t>(axis.steps + 1));
  for (int n = 0; n <= axis.steps; ++n) {
    const double t = march == MarchDirection::Forward ? axis.time(n) : axis.maturity - axis.time(n);
    buckets[static_cast<std::size_t>(n)] = drift_bucket(times, t);
  }
  return buckets;
}

struct StepOperator {
  Eigen::MatrixXd S;  // A_d^{-1} B_d
  Eigen::MatrixXd K;  // [H; BR]: residual^2 = y^T H y, ||B Q y||^2 = y^T BR y
};

}  // namespace

double aggregate_residuals(const Eigen::VectorXd& per_step, ResidualAggregation aggregation) {
  if (per_step.size() == 0) return 0.0;
  if (aggregation == ResidualAggregation::Max) return per_step.maxCoeff();
  return std::sqrt(per_step.squaredNorm() / static_cast<double>(per_step.size()));
}

RomSolution solve_rom(const RomModel& model, const ParameterGroup& rho, const RomSettings& settings) {
  if (std::abs(rho.b - model.b()) > 1e-14 * std::max(1.0, std::abs(model.b())) ||
      std::abs(rho.sigma - model.sigma()) > 1e-14 * std::max(1.0, std::abs(model.sigma())))
    fail(ErrorCode::InvalidArgument, "parameter group statics differ from the reduced model");
  const TimeAxis& axis = model.axis();
  const Eigen::Index d = model.dimension();
  const auto buckets = step_buckets(rho.drift.times, axis, model.settings().march);

  std::map<std::pair<std::size_t, std::size_t>, StepOperator> cache;
  std::vector<const StepOperator*> per_step(static_cast<std::size_t>(axis.steps));
  for (int n = 0; n < axis.steps; ++n) {
    const auto key = std::make_pair(buckets[static_cast<std::size_t>(n)], buckets[static_cast<std::size_t>(n + 1)]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const double a_now = rho.drift.values(static_cast<Eigen::Index>(key.first));
      const double a_next = rho.drift.values(static_cast<Eigen::Index>(key.second));
      const auto ops = model.reduced_operators(a_now, a_next);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(ops.A_d);
      if (!(std::abs(lu.determinant()) > 0.0) || !lu.matrixLU().diagonal().allFinite())
        fail(ErrorCode::SolveFailure, "reduced system matrix is singular");
      StepOperator op;
      op.S = lu.solve(ops.B_d);
      if (!op.S.allFinite()) fail(ErrorCode::SolveFailure, "reduced system matrix is singular");
      const Eigen::MatrixXd gram = model.residual_gram(a_now, a_next);
      const auto TL = gram.topLeftCorner(d, d);
      const auto C = -gram.topRightCorner(d, d);
      const auto BR = gram.bottomRightCorner(d, d);
      op.K.resize(2 * d, d);
      op.K.topRows(d) = op.S.transpose() * TL * op.S - op.S.transpose() * C - C.transpose() * op.S + BR;
      op.K.bottomRows(d) = BR;
      it = cache.emplace(key, std::move(op)).first;
    }
    per_step[static_cast<std::size_t>(n)] = &it->second;
  }

  RomSolution sol;
  sol.reduced_checkpoints.resize(d, axis.checkpoint_count());
  sol.residual_norms.resize(axis.steps);
  if (settings.keep_trajectory) {
    sol.states.resize(d, axis.steps);
    sol.pre_states.resize(d, axis.steps);
  }
  Eigen::VectorXd y = model.initial_state();
  Eigen::VectorXd y_next(d);
  Eigen::VectorXd quad(2 * d);
  sol.reduced_checkpoints.col(0) = y;
  for (int n = 0; n < axis.steps; ++n) {
    const StepOperator& op = *per_step[static_cast<std::size_t>(n)];
    y_next.noalias() = op.S * y;
    quad.noalias() = op.K * y;
    const double res2 = std::max(0.0, y.dot(quad.head(d)));
    const double den2 = std::max(0.0, y.dot(quad.tail(d)));
    sol.residual_norms(n) = den2 > 0.0 ? std::sqrt(res2 / den2) : std::sqrt(res2);
    if (settings.keep_trajectory) {
      sol.states.col(n) = y;
      sol.pre_states.col(n) = y_next;
    }
    if (axis.is_coupon_step(n + 1)) y_next += model.reduced_coupon();
    y.swap(y_next);
    if ((n + 1) % axis.checkpoint_every == 0) sol.reduced_checkpoints.col((n + 1) / axis.checkpoint_every) = y;
  }
  if (!y.allFinite()) fail(ErrorCode::SolveFailure, "reduced march produced non-finite values");
  if (settings.lift) {
    sol.lifted.noalias() = model.basis() * sol.reduced_checkpoints;
    sol.final_values = sol.lifted.col(sol.lifted.cols() - 1);
  } else {
    sol.final_values.noalias() = model.basis() * y;
  }
  sol.epsilon = aggregate_residuals(sol.residual_norms, settings.aggregation);
  return sol;
}

RomSolution solve_rom(const InstrumentSpec& spec, const ParameterGroup& rho, const Eigen::MatrixXd& Q,
                      const RateGrid& grid, const TimeAxis& axis, const SolverSettings& solver,
                      const RomSettings& settings) {
  const RomModel model(Q, grid, spec, axis, rho.b, rho.sigma, solver);
  return solve_rom(model, rho, settings);
}

ResidualReport residual_estimator(const OperatorSchedule& schedule, const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& states, const Eigen::MatrixXd& pre_states,
                                  ResidualAggregation aggregation) {
  if (states.cols() == 0 || states.cols() != pre_states.cols())
    fail(ErrorCode::InvalidArgument, "residual estimator needs a nonempty trajectory");
  ResidualReport report;
  report.per_step.resize(states.cols());
  Eigen::VectorXd u, w, Au, Bw;
  for (Eigen::Index n = 0; n < states.cols(); ++n) {
    const auto& ops = schedule.pair(schedule.pair_of_step(static_cast<int>(n)));
    u.noalias() = Q * pre_states.col(n);
    w.noalias() = Q * states.col(n);
    ops.A.apply(u, Au);
    ops.B.apply(w, Bw);
    const Eigen::VectorXd R = Au - Bw;
    const double den = Bw.norm();
    report.per_step(n) = den > 0.0 ? R.norm() / den : R.norm();
    report.max_galerkin = std::max(report.max_galerkin, (Q.transpose() * R).norm());
  }
  report.epsilon = aggregate_residuals(report.per_step, aggregation);
  return report;
}

double relative_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& approximation) {
  if (reference.rows() != approximation.rows() || reference.cols() != approximation.cols())
    fail(ErrorCode::InvalidArgument, "relative error of differently shaped solutions");
  const double norm = reference.norm();
  if (!(norm > 0.0)) fail(ErrorCode::InvalidArgument, "relative error against a zero reference");
  return (reference - approximation).norm() / norm;
}

}  // namespace hwmor
