#include "hwmor/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hwmor/csv.hpp"
#include "hwmor/errors.hpp"
#include "hwmor/parallel.hpp"

namespace hwmor {

double extract_spot_value(const Eigen::Ref<const Eigen::VectorXd>& values, const RateGrid& grid, double r_sp) {
  const Eigen::Index M = grid.size();
  if (values.size() != M) fail(ErrorCode::InvalidArgument, "value vector does not match the rate grid");
  if (!(r_sp >= grid.lo() && r_sp <= grid.hi()))
    fail(ErrorCode::OutOfDomain, "spot rate " + csv::format_double(r_sp) + " outside the grid [" + csv::format_double(grid.lo()) +
                                     ", " + csv::format_double(grid.hi()) + "]");
  const double* begin = grid.points.data();
  const double* it = std::upper_bound(begin, begin + M, r_sp);
  Eigen::Index k = std::clamp<Eigen::Index>(it - begin - 1, 0, M - 2);
  const double x0 = grid.points(k);
  const double x1 = grid.points(k + 1);
  const double w = (r_sp - x0) / (x1 - x0);
  if (w == 0.0) return values(k);
  if (w == 1.0) return values(k + 1);
  return (1.0 - w) * values(k) + w * values(k + 1);
}

double extract_spot_value(const HdmSolution& solution, const RateGrid& grid, double r_sp) {
  return extract_spot_value(solution.final_values, grid, r_sp);
}

double extract_spot_value(const RomSolution& solution, const RateGrid& grid, double r_sp) {
  return extract_spot_value(solution.final_values, grid, r_sp);
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "percentile of an empty set");
  if (!(q > 0.0 && q <= 100.0)) fail(ErrorCode::InvalidArgument, "percentile rank must lie in (0, 100]");
  const auto s = values.size();
  // q * s first: exact for integral q, so whole-number ranks do not round up
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, s);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

ScenarioFigures percentile_scenarios(const std::vector<double>& values) {
  return {nearest_rank(values, 90.0), nearest_rank(values, 50.0), nearest_rank(values, 10.0)};
}

std::string to_string(Engine engine) { return engine == Engine::Hdm ? "hdm" : "rom"; }

namespace {

struct HorizonPlan {
  InstrumentSpec spec;
  TimeAxis axis;
  std::vector<std::pair<std::size_t, int>> columns;  // (horizon slot, checkpoint column)
};

std::vector<HorizonPlan> plan_horizons(const PricingRequest& request) {
  std::vector<HorizonPlan> plans;
  if (request.horizon_mode == HorizonMode::Checkpoint) {
    HorizonPlan plan{request.spec, request.axis, {}};
    for (std::size_t h = 0; h < request.horizons.size(); ++h)
      plan.columns.emplace_back(h, request.axis.checkpoint_at(request.horizons[h]));
    plans.push_back(std::move(plan));
    return plans;
  }
  for (std::size_t h = 0; h < request.horizons.size(); ++h) {
    HorizonPlan plan{request.spec, {}, {}};
    plan.spec.maturity = request.horizons[h];
    plan.axis = make_time_axis(plan.spec, request.dt_days, request.checkpoint_days);
    plan.columns.emplace_back(h, plan.axis.checkpoint_count() - 1);
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace

PricingRequest make_pricing_request(const PipelineConfig& config, const InstrumentSpec& spec,
                                    const ParameterSpace& space) {
  PricingRequest request;
  request.spec = spec;
  request.solver.theta = config.fdm.theta;
  request.solver.march = config.fdm.march;
  request.horizons = config.horizons;
  request.horizon_mode = config.horizon_mode;
  request.dt_days = config.fdm.dt_days;
  request.checkpoint_days = config.fdm.checkpoint_days;
  request.axis = make_time_axis(spec, config.fdm.dt_days, config.fdm.checkpoint_days);
  if (config.fdm.r_min && config.fdm.r_max) {
    request.grid = uniform_rate_grid(*config.fdm.r_min, *config.fdm.r_max, config.fdm.M);
  } else {
    if (space.spot_rates.size() == 0) fail(ErrorCode::InvalidArgument, "grid window unset and no spot rates available");
    const HullWhiteStatics statics{space.b, space.sigma, space.spot_rates.mean()};
    request.grid = build_rate_grid(statics, statics.r0, spec.maturity, config.fdm.M);
  }
  return request;
}

ScenarioValues price_scenarios(const ParameterSpace& space, const PricingRequest& request, Engine engine,
                               const Eigen::MatrixXd* basis, std::vector<std::size_t> groups, unsigned workers) {
  if (request.horizons.empty()) fail(ErrorCode::InvalidArgument, "no reporting horizons requested");
  if (engine == Engine::Rom && basis == nullptr) fail(ErrorCode::InvalidArgument, "reduced pricing needs a basis");
  if (groups.empty()) {
    groups.resize(space.size());
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = i;
  }
  for (auto g : groups)
    if (g >= space.size()) fail(ErrorCode::InvalidArgument, "scenario index " + std::to_string(g) + " out of range");
  if (space.spot_rates.size() != static_cast<Eigen::Index>(space.size()))
    fail(ErrorCode::InvalidArgument, "parameter space carries no spot rates");

  ScenarioValues out;
  out.engine = engine;
  out.horizons = request.horizons;
  out.groups = groups;
  out.values.resize(static_cast<Eigen::Index>(groups.size()), static_cast<Eigen::Index>(request.horizons.size()));
  out.spot_rates.resize(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t k = 0; k < groups.size(); ++k)
    out.spot_rates(static_cast<Eigen::Index>(k)) = space.spot_rates(static_cast<Eigen::Index>(groups[k]));

  for (const auto& plan : plan_horizons(request)) {
    std::optional<RomModel> model;
    RomSettings rom;
    rom.lift = false;
    if (engine == Engine::Rom) model.emplace(*basis, request.grid, plan.spec, plan.axis, space.b, space.sigma, request.solver);
    parallel_for(groups.size(), workers, [&](std::size_t k) {
      const auto rho = space.group(groups[k]);
      const double r_sp = out.spot_rates(static_cast<Eigen::Index>(k));
      if (engine == Engine::Hdm) {
        const auto sol = price_instrument(plan.spec, rho, request.grid, plan.axis, request.solver);
        for (const auto& [h, c] : plan.columns)
          out.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h)) =
              extract_spot_value(sol.checkpoints.col(c), request.grid, r_sp);
      } else {
        const auto sol = solve_rom(*model, rho, rom);
        for (const auto& [h, c] : plan.columns) {
          const Eigen::VectorXd lifted = *basis * sol.reduced_checkpoints.col(c);
          out.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h)) =
              extract_spot_value(lifted, request.grid, r_sp);
        }
      }
    });
  }
  return out;
}

namespace {

std::string horizon_label(double years) {
  std::string n = csv::format_double(years);
  return n + (years == 1.0 ? " year" : " years");
}

}  // namespace

void write_scenario_values(const ScenarioValues& values, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "scenario,spot_rate";
  for (double h : values.horizons) out << ",value_" << csv::format_double(h) << "y";
  out << '\n';
  for (Eigen::Index k = 0; k < values.values.rows(); ++k) {
    out << values.groups[static_cast<std::size_t>(k)] << ',' << csv::format_double(values.spot_rates(k));
    for (Eigen::Index h = 0; h < values.values.cols(); ++h) out << ',' << csv::format_double(values.values(k, h));
    out << '\n';
  }
}

ScenarioReport build_report(const ScenarioValues& values) {
  ScenarioReport report;
  report.engine = values.engine;
  report.scenarios = static_cast<std::size_t>(values.values.rows());
  for (std::size_t h = 0; h < values.horizons.size(); ++h) {
    const auto col = values.values.col(static_cast<Eigen::Index>(h));
    std::vector<double> v(col.data(), col.data() + col.size());
    report.horizons.push_back({horizon_label(values.horizons[h]), values.horizons[h], percentile_scenarios(v)});
  }
  return report;
}

nlohmann::json report_to_json(const ScenarioReport& report) {
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& h : report.horizons)
    horizons.push_back({{"label", h.label},
                        {"years", h.years},
                        {"favorable", h.figures.favorable},
                        {"moderate", h.figures.moderate},
                        {"unfavorable", h.figures.unfavorable}});
  return {{"engine", to_string(report.engine)},
          {"scenarios", report.scenarios},
          {"percentile_ranks",
           {{"favorable", report.percentile_ranks[0]},
            {"moderate", report.percentile_ranks[1]},
            {"unfavorable", report.percentile_ranks[2]}}},
          {"horizons", horizons},
          {"metadata", report.metadata}};
}

std::string format_report(const ScenarioReport& report) {
  constexpr int kFirst = 22;
  constexpr int kCol = 14;
  std::ostringstream out;
  out << std::left << std::setw(kFirst) << "Scenario";
  for (const auto& h : report.horizons) out << std::right << std::setw(kCol) << h.label;
  out << '\n';
  const std::pair<const char*, double ScenarioFigures::*> rows[] = {
      {"Favorable", &ScenarioFigures::favorable},
      {"Moderate", &ScenarioFigures::moderate},
      {"Unfavorable", &ScenarioFigures::unfavorable},
  };
  for (std::size_t r = 0; r < 3; ++r) {
    std::string name = std::string(rows[r].first) + " (" + std::to_string(report.percentile_ranks[r]) + "th)";
    out << std::left << std::setw(kFirst) << name;
    for (const auto& h : report.horizons)
      out << std::right << std::setw(kCol) << std::fixed << std::setprecision(6) << h.figures.*(rows[r].second);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// benchmark

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double time_once(F&& body) {
  const auto start = Clock::now();
  body();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
double median_time(int repeats, F&& body) {
  std::vector<double> t;
  for (int r = 0; r < std::max(1, repeats); ++r) t.push_back(time_once(body));
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

std::vector<std::size_t> spread_indices(std::size_t total, std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = k * total / count;
  return out;
}

nlohmann::json timing_json(const SolveTiming& t) {
  return {{"solves_timed", t.solves},
          {"scenarios", t.scenarios},
          {"per_solve_seconds", t.per_solve},
          {"total_seconds", t.total},
          {"extrapolated", t.extrapolated}};
}

}  // namespace

BenchmarkReport run_benchmark(const ParameterSpace& space, const PricingRequest& request,
                              const PipelineConfig& config, const BenchmarkOptions& options) {
  const std::size_t scenarios = options.scenarios == 0 ? space.size() : options.scenarios;
  if (scenarios > space.size())
    fail(ErrorCode::InvalidArgument, "benchmark asks for " + std::to_string(scenarios) + " scenarios but the space has " +
                                         std::to_string(space.size()));
  if (scenarios == 0) fail(ErrorCode::InvalidArgument, "benchmark needs at least one scenario");

  BenchmarkReport report;
  report.scenarios = scenarios;
  report.grid_points = request.grid.size();
  report.steps = request.axis.steps;
  report.repeats = std::max(1, options.repeats);

  const std::size_t hdm_count = options.hdm_sample == 0 ? scenarios : std::min(options.hdm_sample, scenarios);
  const auto hdm_groups = spread_indices(scenarios, hdm_count);
  const double hdm_batch = median_time(report.repeats, [&] {
    price_scenarios(space, request, Engine::Hdm, nullptr, hdm_groups, options.workers);
  });
  report.hdm.solves = hdm_count;
  report.hdm.scenarios = scenarios;
  report.hdm.per_solve = hdm_batch / static_cast<double>(hdm_count);
  report.hdm.extrapolated = hdm_count < scenarios;
  report.hdm.total = report.hdm.extrapolated ? report.hdm.per_solve * static_cast<double>(scenarios) : hdm_batch;

  std::vector<std::size_t> all(scenarios);
  for (std::size_t i = 0; i < scenarios; ++i) all[i] = i;

  for (const auto& strategy : options.strategies) {
    if (strategy != "classical" && strategy != "adaptive")
      fail(ErrorCode::InvalidArgument, "unknown sampling strategy '" + strategy + "'");
    RomSettings rom;
    rom.aggregation = config.greedy.residual_aggregation;
    HullWhiteProblem problem(space, request.spec, request.grid, request.axis, request.solver, rom);
    GreedyResult trained;
    StrategyTiming row;
    row.strategy = strategy;
    row.reduction_time = time_once([&] {
      trained = strategy == "classical"
                    ? classical_greedy(problem, config.greedy, config.energy_level, config.seed, options.workers)
                    : adaptive_greedy(problem, config.greedy, config.energy_level, config.seed, options.workers);
    });
    row.d = trained.basis.d;
    row.snapshots = trained.basis.sources.size();
    const Eigen::MatrixXd Q = trained.basis.Q;
    const double rom_batch = median_time(report.repeats, [&] {
      price_scenarios(space, request, Engine::Rom, &Q, all, options.workers);
    });
    row.rom.solves = scenarios;
    row.rom.scenarios = scenarios;
    row.rom.total = rom_batch;
    row.rom.per_solve = rom_batch / static_cast<double>(scenarios);
    row.per_solve_ratio = report.hdm.per_solve / row.rom.per_solve;
    row.speedup = report.hdm.total / (row.reduction_time + row.rom.total);
    report.strategies.push_back(row);
  }
  return report;
}

nlohmann::json benchmark_to_json(const BenchmarkReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.strategies)
    rows.push_back({{"strategy", r.strategy},
                    {"reduction_time_seconds", r.reduction_time},
                    {"d", r.d},
                    {"snapshot_groups", r.snapshots},
                    {"rom", timing_json(r.rom)},
                    {"per_solve_ratio", r.per_solve_ratio},
                    {"speedup", r.speedup}});
  return {{"scenarios", report.scenarios},
          {"grid_points", report.grid_points},
          {"time_steps", report.steps},
          {"timing",
           {{"clock", "steady_clock wall time"}, {"repeats", report.repeats}, {"statistic", "median"}}},
          {"hdm", timing_json(report.hdm)},
          {"strategies", rows}};
}

}  // namespace hwmor
