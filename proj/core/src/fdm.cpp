#include "hwmor/fdm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "hwmor/errors.hpp"

namespace hwmor {

RateGrid uniform_rate_grid(double lo, double hi, int M) {
  if (M < 3) fail(ErrorCode::InvalidArgument, "rate grid needs M >= 3");
  if (!(hi > lo)) fail(ErrorCode::DegenerateDomain, "rate domain has zero width");
  RateGrid grid;
  grid.dx = (hi - lo) / (M - 1);
  grid.points.resize(M);
  for (int i = 0; i < M; ++i) grid.points(i) = lo + i * grid.dx;
  grid.points(M - 1) = hi;
  grid.u = hi;
  grid.v = lo;
  return grid;
}

RateGrid build_rate_grid(const HullWhiteStatics& statics, double r_sp, double T, int M,
                         std::optional<std::pair<double, double>> window) {
  if (window) return uniform_rate_grid(window->first, window->second, M);
  const double half = 7.0 * statics.sigma * std::sqrt(T);
  if (!(half > 0.0)) fail(ErrorCode::DegenerateDomain, "sigma sqrt(T) is zero; give an explicit window");
  auto grid = uniform_rate_grid(r_sp - half, r_sp + half, M);
  grid.u = r_sp + half;
  grid.v = r_sp - half;
  return grid;
}

void InstrumentSpec::validate() const {
  if (!(nominal > 0.0)) fail(ErrorCode::InvalidArgument, "nominal must be positive");
  if (!(maturity > 0.0)) fail(ErrorCode::InvalidArgument, "maturity must be positive");
  if (kind == InstrumentKind::CappedFlooredFloater) {
    if (coupon_frequency < 1) fail(ErrorCode::InvalidArgument, "coupon_frequency must be >= 1");
    if (floor_rate > cap_rate) fail(ErrorCode::InvalidArgument, "floor_rate exceeds cap_rate");
  }
}

NLOHMANN_JSON_SERIALIZE_ENUM(InstrumentKind, {{InstrumentKind::ZeroCouponBond, "zero_coupon_bond"},
                                              {InstrumentKind::CappedFlooredFloater, "capped_floored_floater"}})

void to_json(nlohmann::json& j, const InstrumentSpec& spec) {
  j = nlohmann::json{{"kind", spec.kind},
                     {"nominal", spec.nominal},
                     {"maturity", spec.maturity},
                     {"coupon_frequency", spec.coupon_frequency},
                     {"cap_rate", spec.cap_rate},
                     {"floor_rate", spec.floor_rate},
                     {"reference_tenor", spec.reference_tenor}};
}

void from_json(const nlohmann::json& j, InstrumentSpec& spec) {
  static const std::vector<std::string> known{"kind",     "nominal",    "maturity",       "coupon_frequency",
                                              "cap_rate", "floor_rate", "reference_tenor"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      fail(ErrorCode::InvalidArgument, "unknown instrument key '" + it.key() + "'");
  if (auto it = j.find("kind"); it != j.end()) {
    const auto name = it->get<std::string>();
    if (name != "zero_coupon_bond" && name != "capped_floored_floater")
      fail(ErrorCode::InvalidArgument, "unknown instrument kind '" + name + "'");
    it->get_to(spec.kind);
  }
  spec.nominal = j.value("nominal", spec.nominal);
  spec.maturity = j.value("maturity", spec.maturity);
  spec.coupon_frequency = j.value("coupon_frequency", spec.coupon_frequency);
  spec.cap_rate = j.value("cap_rate", spec.cap_rate);
  spec.floor_rate = j.value("floor_rate", spec.floor_rate);
  spec.reference_tenor = j.value("reference_tenor", spec.reference_tenor);
}

InstrumentSpec load_instrument(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open instrument " + path.string());
  InstrumentSpec spec;
  try {
    nlohmann::json j;
    in >> j;
    spec = j.get<InstrumentSpec>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  spec.validate();
  return spec;
}

void save_instrument(const InstrumentSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << nlohmann::json(spec).dump(2) << '\n';
}

int TimeAxis::checkpoint_at(double t) const {
  const double n = t / dt;
  const auto step = static_cast<int>(std::llround(n));
  if (std::abs(n - step) > 1e-9 * std::max(1.0, n) || step < 0 || step > steps || step % checkpoint_every != 0)
    fail(ErrorCode::ScheduleMismatch, "time " + std::to_string(t) + " is not a checkpoint");
  return step / checkpoint_every;
}

TimeAxis TimeAxis::uniform(double maturity, int steps, int coupon_every, int checkpoint_every) {
  if (steps < 1 || checkpoint_every < 1 || coupon_every < 0)
    fail(ErrorCode::InvalidArgument, "time axis needs steps >= 1 and positive strides");
  if (steps % checkpoint_every != 0) fail(ErrorCode::ScheduleMismatch, "checkpoint stride does not divide the march");
  if (coupon_every > 0 && steps % coupon_every != 0)
    fail(ErrorCode::ScheduleMismatch, "coupon stride does not divide the march");
  TimeAxis axis;
  axis.maturity = maturity;
  axis.steps = steps;
  axis.dt = maturity / steps;
  axis.coupon_every = coupon_every;
  axis.checkpoint_every = checkpoint_every;
  return axis;
}

namespace {

int whole_steps(double days, double dt_days, const char* what) {
  const double n = days / dt_days;
  const auto k = static_cast<int>(std::llround(n));
  if (k < 1 || std::abs(n - k) > 1e-9 * std::max(1.0, n))
    fail(ErrorCode::ScheduleMismatch, std::string(what) + " is not a whole number of steps");
  return k;
}

}  // namespace

TimeAxis make_time_axis(const InstrumentSpec& spec, int dt_days, int checkpoint_days) {
  spec.validate();
  if (dt_days < 1 || checkpoint_days < 1) fail(ErrorCode::InvalidArgument, "dt_days and checkpoint_days must be >= 1");
  const int steps = whole_steps(spec.maturity * 360.0, dt_days, "maturity");
  int coupon_every = 0;
  if (spec.kind == InstrumentKind::CappedFlooredFloater)
    coupon_every = whole_steps(360.0 / spec.coupon_frequency, dt_days, "coupon period");
  const int checkpoint_every = whole_steps(checkpoint_days, dt_days, "checkpoint period");
  return TimeAxis::uniform(spec.maturity, steps, coupon_every, checkpoint_every);
}

Tridiagonal spatial_operator(const RateGrid& grid, double a, double b, double sigma) {
  const Eigen::Index M = grid.size();
  Tridiagonal L(M);
  const double diff = 0.5 * sigma * sigma / (grid.dx * grid.dx);
  for (Eigen::Index i = 0; i < M; ++i) {
    const double r = grid.points(i);
    const double c = (a - b * r) / grid.dx;
    double lo = diff;
    double d = -2.0 * diff - r;
    double up = diff;
    if (c > 0.0) {
      d += c;
      lo -= c;
    } else {
      d -= c;
      up += c;
    }
    L.set_row(i, lo, d, up);
  }
  L.lower(0) = 0.0;
  L.upper(M - 1) = 0.0;
  return L;
}

void apply_boundary_conditions(Tridiagonal& A, Eigen::VectorXd& rhs) {
  const Eigen::Index M = A.size();
  A.set_row(0, 0.0, -1.0, 1.0);
  A.set_row(M - 1, 1.0, -1.0, 0.0);
  rhs(0) = 0.0;
  rhs(M - 1) = 0.0;
}

void apply_boundary_conditions(Tridiagonal& A, Tridiagonal& B) {
  const Eigen::Index M = A.size();
  A.set_row(0, 0.0, -1.0, 1.0);
  A.set_row(M - 1, 1.0, -1.0, 0.0);
  B.set_row(0, 0.0, 0.0, 0.0);
  B.set_row(M - 1, 0.0, 0.0, 0.0);
}

OperatorPair assemble_operators(const RateGrid& grid, double a_now, double a_next, double b, double sigma, double dt,
                                double theta) {
  if (theta < 0.0 || theta > 1.0) fail(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  const Tridiagonal L_next = spatial_operator(grid, a_next, b, sigma);
  const Tridiagonal L_now = spatial_operator(grid, a_now, b, sigma);
  OperatorPair out{Tridiagonal::identity(grid.size()), Tridiagonal::identity(grid.size())};
  const double wa = theta * dt;
  const double wb = (1.0 - theta) * dt;
  out.A.lower -= wa * L_next.lower;
  out.A.diag -= wa * L_next.diag;
  out.A.upper -= wa * L_next.upper;
  out.B.lower += wb * L_now.lower;
  out.B.diag += wb * L_now.diag;
  out.B.upper += wb * L_now.upper;
  apply_boundary_conditions(out.A, out.B);
  return out;
}

OperatorPair assemble_operators(const RateGrid& grid, const ParameterGroup& rho, double t, double dt, double theta) {
  return assemble_operators(grid, rho.drift.at(t), rho.drift.at(t + dt), rho.b, rho.sigma, dt, theta);
}

Eigen::VectorXd step(const ThomasFactor& A, const Tridiagonal& B, const Eigen::VectorXd& V,
                     const Eigen::VectorXd* coupon) {
  Eigen::VectorXd next = B.apply(V);
  A.solve_in_place(next);
  if (coupon) next += *coupon;
  return next;
}

Eigen::VectorXd coupon_vector(const InstrumentSpec& spec, const RateGrid& grid) {
  if (spec.kind == InstrumentKind::ZeroCouponBond) return Eigen::VectorXd::Zero(grid.size());
  const double scale = spec.nominal / spec.coupon_frequency;
  return grid.points.unaryExpr([&](double r) { return scale * std::min(spec.cap_rate, std::max(spec.floor_rate, r)); });
}

OperatorSchedule::OperatorSchedule(const RateGrid& grid, const ParameterGroup& rho, const TimeAxis& axis,
                                   double theta, MarchDirection march) {
  const auto& times = rho.drift.times;
  auto bucket_at = [&](int n) {
    const double t = march == MarchDirection::Forward ? axis.time(n) : axis.maturity - axis.time(n);
    return drift_bucket(times, t);
  };
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  step_pair_.resize(static_cast<std::size_t>(axis.steps));
  std::size_t now = bucket_at(0);
  for (int n = 0; n < axis.steps; ++n) {
    const std::size_t next = bucket_at(n + 1);
    const auto key = std::make_pair(now, next);
    auto [it, inserted] = index.try_emplace(key, pairs_.size());
    if (inserted) {
      const double a_now = rho.drift.values(static_cast<Eigen::Index>(now));
      const double a_next = rho.drift.values(static_cast<Eigen::Index>(next));
      pairs_.push_back(assemble_operators(grid, a_now, a_next, rho.b, rho.sigma, axis.dt, theta));
      factors_.emplace_back(pairs_.back().A);
      keys_.push_back(key);
    }
    step_pair_[static_cast<std::size_t>(n)] = it->second;
    now = next;
  }
}

HdmSolution price_instrument(const InstrumentSpec& spec, const ParameterGroup& rho, const RateGrid& grid,
                             const TimeAxis& axis, const SolverSettings& settings) {
  spec.validate();
  const OperatorSchedule schedule(grid, rho, axis, settings.theta, settings.march);
  const Eigen::VectorXd coupon = coupon_vector(spec, grid);

  HdmSolution sol;
  sol.axis = axis;
  sol.parameter_index = rho.index;
  sol.checkpoints.resize(grid.size(), axis.checkpoint_count());
  Eigen::VectorXd V = Eigen::VectorXd::Constant(grid.size(), spec.nominal);
  Eigen::VectorXd scratch(grid.size());
  sol.checkpoints.col(0) = V;
  for (int n = 0; n < axis.steps; ++n) {
    const std::size_t p = schedule.pair_of_step(n);
    schedule.pair(p).B.apply(V, scratch);
    schedule.factor(p).solve_in_place(scratch);
    V.swap(scratch);
    if (axis.is_coupon_step(n + 1)) V += coupon;
    if ((n + 1) % axis.checkpoint_every == 0) sol.checkpoints.col((n + 1) / axis.checkpoint_every) = V;
  }
  if (!V.allFinite()) fail(ErrorCode::SolveFailure, "finite-difference march produced non-finite values");
  sol.final_values = V;
  return sol;
}

}  // namespace hwmor
