#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixture.hpp"

#ifndef HWMOR_CLI
#error "HWMOR_CLI must name the hwmor executable"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(HWMOR_CLI) + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  return rows - 1;
}

// Small, fast pipeline settings.
fs::path write_config(const fs::path& dir) {
  const auto path = dir / "config.json";
  std::ofstream(path) << R"({
  "bootstrap_count": 30,
  "holding_period_days": 500,
  "calibration_tenors": 11,
  "energy_level": 99.9,
  "fdm": {"M": 120},
  "greedy": {"C": 20, "C_0": 10, "C_k": 5, "I_max": 4}
})";
  return path;
}

struct Pipeline {
  fs::path dir, config, history, curves, params, basis, trace;
};

Pipeline run_pipeline(const std::string& name, const std::string& extra = "") {
  Pipeline p;
  p.dir = hwmor::fixture::scratch_dir(name);
  p.config = write_config(p.dir);
  p.history = p.dir / "history.csv";
  p.curves = p.dir / "curves.csv";
  p.params = p.dir / "params.csv";
  p.basis = p.dir / "basis.rob";
  p.trace = p.dir / "trace.json";
  const std::string common = " --config " + p.config.string() + extra;
  EXPECT_EQ(run("generate-history --periods 400 --out " + p.history.string()), 0);
  EXPECT_EQ(run("simulate --history " + p.history.string() + " --out " + p.curves.string() + common), 0);
  EXPECT_EQ(run("calibrate --curves " + p.curves.string() + " --out " + p.params.string() + common), 0);
  EXPECT_EQ(run("train --params " + p.params.string() + " --instrument " +
                (hwmor::fixture::config_dir() / "floater.json").string() + " --out " + p.basis.string() +
                " --trace " + p.trace.string() + common),
            0);
  return p;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("simulate --out x.csv"), 2);
}

TEST(Cli, MalformedHistoryExitsWithTwo) {
  const auto dir = hwmor::fixture::scratch_dir("cli_malformed");
  std::ofstream(dir / "bad.csv") << "date,1Y,2Y\n2020-01-01,0.01,0.02\n2020-01-02,0.01,\n";
  EXPECT_EQ(run("simulate --history " + (dir / "bad.csv").string() + " --out " + (dir / "c.csv").string()), 2);
  std::ofstream(dir / "dates.csv") << "date,1Y,2Y\n2020-01-02,0.01,0.02\n2020-01-01,0.01,0.02\n";
  EXPECT_EQ(run("simulate --history " + (dir / "dates.csv").string() + " --out " + (dir / "c.csv").string()), 2);
}

TEST(Cli, SameSeedGivesIdenticalArtifacts) {
  const auto a = run_pipeline("cli_seed_a", " --seed 42");
  const auto b = run_pipeline("cli_seed_b", " --seed 42 --workers 2");
  for (const auto& [x, y] : {std::pair{a.curves, b.curves}, {a.params, b.params}, {a.trace, b.trace}}) {
    const auto text = slurp(x);
    EXPECT_FALSE(text.empty()) << x;
    EXPECT_EQ(text, slurp(y)) << x.filename();
  }
  const auto c = run_pipeline("cli_seed_c", " --seed 43");
  EXPECT_NE(slurp(a.curves), slurp(c.curves));
}

TEST(Cli, PriceReportsAndRejectsStaleBasis) {
  const auto p = run_pipeline("cli_price");
  const auto floater = (hwmor::fixture::config_dir() / "floater.json").string();
  const std::string common = " --config " + p.config.string();
  const auto values = p.dir / "values.csv";
  const auto report = p.dir / "report.json";
  ASSERT_EQ(run("price --engine rom --params " + p.params.string() + " --instrument " + floater + " --basis " +
                p.basis.string() + " --out " + values.string() + " --report " + report.string() + common),
            0);
  EXPECT_EQ(data_rows(values), 30u);
  const auto j = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(j.at("engine"), "rom");

  // Same shape, different contents: the basis no longer belongs to these parameters.
  auto text = slurp(p.params);
  const auto last_digit = text.find(',', text.find('\n') + 1) - 1;
  text[last_digit] = text[last_digit] == '5' ? '6' : '5';
  const auto other = p.dir / "other.csv";
  std::ofstream(other, std::ios::binary) << text;
  fs::copy_file(p.params.string() + ".json", other.string() + ".json");
  EXPECT_EQ(run("price --engine rom --params " + other.string() + " --instrument " + floater + " --basis " +
                p.basis.string() + " --out " + values.string() + " --report " + report.string() + common),
            2);
}

TEST(Cli, EnvironmentOverridesConfigAndFlagsOverrideEnvironment) {
  const auto dir = hwmor::fixture::scratch_dir("cli_env");
  const auto config = write_config(dir);
  const auto history = dir / "history.csv";
  ASSERT_EQ(run("generate-history --periods 300 --out " + history.string()), 0);
  const auto curves = dir / "curves.csv";
  const std::string base = "simulate --history " + history.string() + " --out " + curves.string() + " --config " +
                           config.string();
  ASSERT_EQ(run(base), 0);
  EXPECT_EQ(data_rows(curves), 30u);
  ASSERT_EQ(run(base, "HWMOR_S=7"), 0);
  EXPECT_EQ(data_rows(curves), 7u);
  ASSERT_EQ(run(base + " --s 9", "HWMOR_S=7"), 0);
  EXPECT_EQ(data_rows(curves), 9u);
}

TEST(Cli, VerifyDetectsModifiedArtifacts) {
  const auto p = run_pipeline("cli_verify");
  const auto manifest = p.basis.string() + ".manifest.json";
  ASSERT_TRUE(fs::exists(manifest));
  EXPECT_EQ(run("verify " + manifest), 0);
  std::ofstream(p.trace, std::ios::app) << " ";
  EXPECT_EQ(run("verify " + manifest), 2);
}
