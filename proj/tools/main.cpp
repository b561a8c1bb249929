#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwmor/calibration.hpp"
#include "hwmor/curve_sim.hpp"
#include "hwmor/errors.hpp"
#include "hwmor/fdm.hpp"
#include "hwmor/greedy.hpp"
#include "hwmor/market_data.hpp"
#include "hwmor/parallel.hpp"
#include "hwmor/report.hpp"
#include "hwmor/rom.hpp"
#include "hwmor/synthetic.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace hwmor;
using hwmor::cli::RunManifest;
using hwmor::cli::read_manifest;
using hwmor::cli::write_manifest;

#ifndef HWMOR_VERSION
#define HWMOR_VERSION "dev"
#endif

namespace {

// Values set on the command line or through HWMOR_* variables. Anything left
// empty falls back to the config file, then to the built-in default.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> s;
  std::optional<int> h;
  std::optional<int> p_sim;
  std::optional<double> shift_epsilon;
  std::optional<double> b;
  std::optional<double> sigma;
  std::optional<double> mu;
  std::optional<int> tenors;
  std::optional<double> energy_level;
  std::optional<int> I_max;
  std::optional<int> C;
  std::optional<int> C_0;
  std::optional<int> C_k;
  std::optional<double> eps_tol;
  std::optional<double> e_max_tol;
  std::optional<int> pcr_components;
  std::optional<int> M;
  std::optional<double> theta;
  std::optional<int> dt_days;
  bool no_forward_adjustment = false;
};

template <class T>
void apply(const std::optional<T>& value, T& target) {
  if (value) target = *value;
}

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig c = o.config_path ? load_config(*o.config_path) : PipelineConfig{};
  apply(o.workers, c.workers);
  apply(o.seed, c.seed);
  apply(o.s, c.bootstrap_count);
  apply(o.h, c.holding_period_days);
  apply(o.p_sim, c.pca_components);
  apply(o.shift_epsilon, c.shift_epsilon);
  apply(o.b, c.statics.b);
  apply(o.sigma, c.statics.sigma);
  if (o.mu) c.tikhonov_mu = *o.mu;
  apply(o.tenors, c.calibration_tenors);
  apply(o.energy_level, c.energy_level);
  apply(o.I_max, c.greedy.I_max);
  apply(o.C, c.greedy.C);
  apply(o.C_0, c.greedy.C_0);
  apply(o.C_k, c.greedy.C_k);
  apply(o.eps_tol, c.greedy.eps_tol);
  apply(o.e_max_tol, c.greedy.e_max_tol);
  apply(o.pcr_components, c.greedy.pcr_components);
  apply(o.M, c.fdm.M);
  apply(o.theta, c.fdm.theta);
  apply(o.dt_days, c.fdm.dt_days);
  if (o.no_forward_adjustment) c.forward_adjustment = false;
  c.validate();
  return c;
}

unsigned worker_count(const PipelineConfig& c) { return resolve_workers(c.workers); }

RunManifest start_manifest(const std::string& command, const PipelineConfig& config) {
  RunManifest m;
  m.tool_version = HWMOR_VERSION;
  m.command = command;
  m.config_hash = cli::sha256_text(nlohmann::json(config).dump());
  m.seed = config.seed;
  return m;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void prepare_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

void write_plot_data(const GreedyResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream res(dir / "residuals.csv");
  res << "iteration,max_epsilon,mean_epsilon,d\n";
  for (const auto& it : result.trace.iterations)
    res << it.iteration << ',' << it.max_epsilon << ',' << it.mean_epsilon << ',' << it.d << '\n';
  std::ofstream pts(dir / "error_points.csv");
  pts << "iteration,phase,error,estimator\n";
  pts.precision(17);
  for (const auto& it : result.trace.iterations) {
    if (it.before) pts << it.iteration << ",before," << it.before->error << ',' << it.before->estimator << '\n';
    if (it.after) pts << it.iteration << ",after," << it.after->error << ',' << it.after->estimator << '\n';
  }
}

// ---------------------------------------------------------------------------

struct HistoryArgs {
  std::string out;
  int periods = 1306;
  std::uint64_t seed = SyntheticHistoryOptions{}.seed;
};

int cmd_generate_history(const HistoryArgs& a) {
  SyntheticHistoryOptions options;
  options.periods = a.periods;
  options.seed = a.seed;
  const auto history = synthetic_history(options);
  prepare_output(a.out);
  write_rate_history(history, a.out);
  std::cout << "wrote " << history.periods() << "x" << history.tenors() << " history to " << a.out << '\n';
  return 0;
}

struct SimulateArgs {
  std::string history;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, const Overrides& o) {
  const auto config = resolve_config(o);
  auto manifest = start_manifest("simulate", config);
  Stopwatch clock;
  const auto history = load_rate_history(a.history);
  manifest.timings["load"] = clock.lap();
  auto run = config;
  run.workers = static_cast<int>(worker_count(config));
  const auto curves = simulate_curves(history, run);
  manifest.timings["simulate"] = clock.lap();
  prepare_output(a.out);
  write_curves(curves, a.out);
  manifest.add_input(a.history);
  manifest.add_artifact(a.out);
  manifest.add_artifact(a.out + ".json");
  write_manifest(manifest, cli::manifest_path_for(a.out));
  std::cout << "simulated " << curves.curves.rows() << " curves over " << curves.grid.size() << " tenors (p_sim "
            << curves.p_sim << ", gamma " << curves.gamma << ") -> " << a.out << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string curves;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a, const Overrides& o) {
  const auto config = resolve_config(o);
  auto manifest = start_manifest("calibrate", config);
  Stopwatch clock;
  const auto curves = read_curves(a.curves);
  auto run = config;
  run.workers = static_cast<int>(worker_count(config));
  const auto space = calibrate_all(curves, run);
  manifest.timings["calibrate"] = clock.lap();
  prepare_output(a.out);
  write_parameter_space(space, a.out);
  manifest.add_input(a.curves);
  manifest.add_artifact(a.out);
  manifest.add_artifact(a.out + ".json");
  write_manifest(manifest, cli::manifest_path_for(a.out));
  std::cout << "calibrated " << space.size() << " drift vectors over " << space.grid.size() << " buckets";
  if (!space.failed_rows.empty()) std::cout << " (" << space.failed_rows.size() << " rows dropped)";
  std::cout << " -> " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string params;
  std::string instrument;
  std::string strategy = "adaptive";
  std::string out;
  std::string trace;
  std::string plot_data;
};

int cmd_train(const TrainArgs& a, const Overrides& o) {
  const auto config = resolve_config(o);
  auto manifest = start_manifest("train", config);
  Stopwatch clock;
  const auto space = read_parameter_space(a.params);
  const auto spec = load_instrument(a.instrument);
  const auto request = make_pricing_request(config, spec, space);
  RomSettings rom;
  rom.aggregation = config.greedy.residual_aggregation;
  HullWhiteProblem problem(space, spec, request.grid, request.axis, request.solver, rom);
  const unsigned workers = worker_count(config);
  GreedyResult result = a.strategy == "classical"
                            ? classical_greedy(problem, config.greedy, config.energy_level, config.seed, workers)
                            : adaptive_greedy(problem, config.greedy, config.energy_level, config.seed, workers);
  manifest.timings["train"] = clock.lap();
  result.basis.params_hash = cli::sha256_file(a.params);
  prepare_output(a.out);
  prepare_output(a.trace);
  write_basis(result.basis, a.out);
  write_trace(result, a.trace);
  if (!a.plot_data.empty()) write_plot_data(result, a.plot_data);
  manifest.add_input(a.params);
  manifest.add_input(a.instrument);
  manifest.add_artifact(a.out);
  manifest.add_artifact(a.trace);
  write_manifest(manifest, cli::manifest_path_for(a.out));
  std::cout << a.strategy << " greedy: " << result.trace.iterations.size() << " iterations, "
            << result.basis.sources.size() << " snapshot groups, d = " << result.basis.d << ", stopped on "
            << to_string(result.trace.terminated_reason) << " -> " << a.out << '\n';
  return 0;
}

struct PriceArgs {
  std::string params;
  std::string instrument;
  std::string engine = "hdm";
  std::string basis;
  std::string out;
  std::string report;
  std::size_t limit = 0;
};

int cmd_price(const PriceArgs& a, const Overrides& o) {
  const auto config = resolve_config(o);
  auto manifest = start_manifest("price", config);
  Stopwatch clock;
  const auto space = read_parameter_space(a.params);
  const auto spec = load_instrument(a.instrument);
  const auto request = make_pricing_request(config, spec, space);
  const Engine engine = a.engine == "rom" ? Engine::Rom : Engine::Hdm;

  std::optional<ReducedBasis> basis;
  if (engine == Engine::Rom) {
    if (a.basis.empty()) fail(ErrorCode::InvalidArgument, "--engine rom requires --basis");
    basis = read_basis(a.basis);
    if (basis->params_hash != cli::sha256_file(a.params))
      fail(ErrorCode::StaleArtifact, a.basis + " was trained on a different parameter file than " + a.params);
    if (basis->Q.rows() != request.grid.size())
      fail(ErrorCode::StaleArtifact, a.basis + " has " + std::to_string(basis->Q.rows()) +
                                         " grid rows but the config asks for " + std::to_string(request.grid.size()));
    manifest.add_input(a.basis);
  }

  std::vector<std::size_t> groups;
  if (a.limit > 0)
    for (std::size_t i = 0; i < std::min(a.limit, space.size()); ++i) groups.push_back(i);
  manifest.timings["setup"] = clock.lap();
  const auto values = price_scenarios(space, request, engine, basis ? &basis->Q : nullptr, groups, worker_count(config));
  const double pricing = clock.lap();
  manifest.timings["price"] = pricing;

  auto report = build_report(values);
  report.metadata = {{"engine", a.engine},
                     {"pricing_seconds", pricing},
                     {"grid_points", request.grid.size()},
                     {"time_steps", request.axis.steps},
                     {"horizon_mode", config.horizon_mode == HorizonMode::Checkpoint ? "checkpoint" : "separate"}};
  if (basis) report.metadata["d"] = basis->d;
  prepare_output(a.out);
  prepare_output(a.report);
  write_scenario_values(values, a.out);
  write_json(report_to_json(report), a.report);
  manifest.add_input(a.params);
  manifest.add_input(a.instrument);
  manifest.add_artifact(a.out);
  manifest.add_artifact(a.report);
  write_manifest(manifest, cli::manifest_path_for(a.report));
  std::cout << format_report(report);
  return 0;
}

struct BenchArgs {
  std::string params;
  std::string instrument;
  std::string out;
  std::size_t scenarios = 0;
  std::size_t hdm_sample = 0;
  int repeats = 3;
  std::vector<std::string> strategies{"classical", "adaptive"};
};

int cmd_bench(const BenchArgs& a, const Overrides& o) {
  const auto config = resolve_config(o);
  auto manifest = start_manifest("bench", config);
  Stopwatch clock;
  const auto space = read_parameter_space(a.params);
  const auto spec = load_instrument(a.instrument);
  const auto request = make_pricing_request(config, spec, space);
  BenchmarkOptions options;
  options.scenarios = a.scenarios;
  options.hdm_sample = a.hdm_sample;
  options.repeats = a.repeats;
  options.strategies = a.strategies;
  options.workers = worker_count(config);
  const auto bench = run_benchmark(space, request, config, options);
  manifest.timings["bench"] = clock.lap();
  prepare_output(a.out);
  write_json(benchmark_to_json(bench), a.out);
  manifest.add_input(a.params);
  manifest.add_input(a.instrument);
  manifest.add_artifact(a.out);
  write_manifest(manifest, cli::manifest_path_for(a.out));
  std::cout << "HDM per solve " << bench.hdm.per_solve << " s, total " << bench.hdm.total << " s"
            << (bench.hdm.extrapolated ? " (extrapolated)" : "") << '\n';
  for (const auto& r : bench.strategies)
    std::cout << r.strategy << ": T_Q " << r.reduction_time << " s, d " << r.d << ", ROM per solve " << r.rom.per_solve
              << " s, total " << r.rom.total << " s, speedup " << r.speedup << "x\n";
  return 0;
}

int cmd_verify(const std::string& path) {
  const auto manifest = read_manifest(path);
  const auto stale = cli::stale_entries(manifest);
  if (stale.empty()) {
    std::cout << path << ": " << manifest.inputs.size() + manifest.artifacts.size() << " hashes verified\n";
    return 0;
  }
  for (const auto& f : stale) std::cerr << "stale: " << f << '\n';
  fail(ErrorCode::StaleArtifact, path + " no longer matches " + std::to_string(stale.size()) + " file(s)");
}

void add_pipeline_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON pipeline config")->envname("HWMOR_CONFIG")->check(CLI::ExistingFile);
  app->add_option("--workers", o.workers, "Worker threads (0: all cores)")->envname("HWMOR_WORKERS");
  app->add_option("--seed", o.seed, "PRNG seed")->envname("HWMOR_SEED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hull-White scenario pricing with POD reduced-order models"};
  app.set_version_flag("--version", HWMOR_VERSION);
  app.require_subcommand(1);
  Overrides o;

  HistoryArgs history;
  auto* gen = app.add_subcommand("generate-history", "Write a synthetic daily rate history");
  gen->add_option("--out", history.out, "Output CSV")->required();
  gen->add_option("--periods", history.periods, "Observation periods");
  gen->add_option("--seed", history.seed, "PRNG seed");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Bootstrap future yield curves from a rate history");
  simulate->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  simulate->add_option("--history", sim.history, "Rate history CSV")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Curves CSV")->required();
  add_pipeline_options(simulate, o);
  simulate->add_option("--s", o.s, "Number of simulated curves")->envname("HWMOR_S");
  simulate->add_option("--h", o.h, "Holding period in observation days")->envname("HWMOR_H");
  simulate->add_option("--p-sim", o.p_sim, "PCA components (0: 99% energy)")->envname("HWMOR_P_SIM");
  simulate->add_option("--shift-epsilon", o.shift_epsilon, "Positivity shift margin")->envname("HWMOR_SHIFT_EPSILON");
  simulate->add_flag("--no-forward-adjustment", o.no_forward_adjustment, "Skip the forward-rate adjustment");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate piecewise-constant drifts to simulated curves");
  calibrate->add_option("--curves", cal.curves, "Curves CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", cal.out, "Parameter CSV")->required();
  add_pipeline_options(calibrate, o);
  calibrate->add_option("--b", o.b, "Mean reversion speed")->envname("HWMOR_B");
  calibrate->add_option("--sigma", o.sigma, "Short-rate volatility")->envname("HWMOR_SIGMA");
  calibrate->add_option("--mu", o.mu, "Tikhonov parameter")->envname("HWMOR_MU");
  calibrate->add_option("--tenors", o.tenors, "Leading tenors to calibrate (0: all)")->envname("HWMOR_TENORS");

  auto add_fdm_options = [&](CLI::App* cmd) {
    cmd->add_option("--M", o.M, "Rate grid points")->envname("HWMOR_M");
    cmd->add_option("--theta", o.theta, "Time-stepping theta")->envname("HWMOR_THETA");
    cmd->add_option("--dt-days", o.dt_days, "Time step in days")->envname("HWMOR_DT_DAYS");
  };
  auto add_greedy_options = [&](CLI::App* cmd) {
    cmd->add_option("--energy-level", o.energy_level, "POD energy level in percent")->envname("HWMOR_ENERGY_LEVEL");
    cmd->add_option("--Imax", o.I_max, "Maximum greedy iterations")->envname("HWMOR_IMAX");
    cmd->add_option("--C", o.C, "Candidate set size")->envname("HWMOR_C");
    cmd->add_option("--C0", o.C_0, "Initial random candidates (adaptive)")->envname("HWMOR_C0");
    cmd->add_option("--Ck", o.C_k, "Surrogate picks per round (adaptive)")->envname("HWMOR_CK");
    cmd->add_option("--eps-tol", o.eps_tol, "Residual tolerance (classical)")->envname("HWMOR_EPS_TOL");
    cmd->add_option("--emax-tol", o.e_max_tol, "Modelled error tolerance (adaptive)")->envname("HWMOR_EMAX_TOL");
    cmd->add_option("--pcr-components", o.pcr_components, "PCR components")->envname("HWMOR_PCR_COMPONENTS");
  };

  TrainArgs train;
  auto* trn = app.add_subcommand("train", "Build a reduced basis by greedy snapshot sampling");
  trn->add_option("--params", train.params, "Parameter CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--instrument", train.instrument, "Instrument JSON")->required()->check(CLI::ExistingFile);
  trn->add_option("--strategy", train.strategy, "classical or adaptive")
      ->check(CLI::IsMember({"classical", "adaptive"}));
  trn->add_option("--out", train.out, "Basis file (.rob)")->required();
  trn->add_option("--trace", train.trace, "Greedy trace JSON")->required();
  trn->add_option("--plot-data", train.plot_data, "Directory for tidy residual and error-model CSVs");
  add_pipeline_options(trn, o);
  add_fdm_options(trn);
  add_greedy_options(trn);

  PriceArgs price;
  auto* prc = app.add_subcommand("price", "Price every scenario and report favorable/moderate/unfavorable values");
  prc->add_option("--params", price.params, "Parameter CSV")->required()->check(CLI::ExistingFile);
  prc->add_option("--instrument", price.instrument, "Instrument JSON")->required()->check(CLI::ExistingFile);
  prc->add_option("--engine", price.engine, "hdm or rom")->check(CLI::IsMember({"hdm", "rom"}));
  prc->add_option("--basis", price.basis, "Basis file for --engine rom")->check(CLI::ExistingFile);
  prc->add_option("--out", price.out, "Scenario values CSV")->required();
  prc->add_option("--report", price.report, "Scenario report JSON")->required();
  prc->add_option("--limit", price.limit, "Price only the first N scenarios");
  add_pipeline_options(prc, o);
  add_fdm_options(prc);

  BenchArgs bench;
  auto* bch = app.add_subcommand("bench", "Time basis construction and HDM versus ROM evaluation");
  bch->add_option("--params", bench.params, "Parameter CSV")->required()->check(CLI::ExistingFile);
  bch->add_option("--instrument", bench.instrument, "Instrument JSON")->required()->check(CLI::ExistingFile);
  bch->add_option("--out", bench.out, "Benchmark JSON")->required();
  bch->add_option("--scenarios", bench.scenarios, "Scenarios to evaluate (0: all)");
  bch->add_option("--hdm-sample", bench.hdm_sample, "HDM solves to time; the total is extrapolated");
  bch->add_option("--repeats", bench.repeats, "Timing repeats (median)");
  bch->add_option("--strategies", bench.strategies, "Sampling strategies to time");
  add_pipeline_options(bch, o);
  add_fdm_options(bch);
  add_greedy_options(bch);

  std::string manifest_file;
  auto* verify = app.add_subcommand("verify", "Re-hash the files listed in a run manifest");
  verify->add_option("manifest", manifest_file, "Manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate_history(history);
    if (*simulate) return cmd_simulate(sim, o);
    if (*calibrate) return cmd_calibrate(cal, o);
    if (*trn) return cmd_train(train, o);
    if (*prc) return cmd_price(price, o);
    if (*bch) return cmd_bench(bench, o);
    if (*verify) return cmd_verify(manifest_file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
