#include "hwmor/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hwmor/csv.hpp"
#include "hwmor/errors.hpp"
#include "json_enums.hpp"

namespace hwmor {

double parse_tenor(const std::string& label) {
  if (label == "ON" || label == "0D") return 0.0;
  if (label.size() < 2) fail(ErrorCode::TenorParseError, "'" + label + "'");
  const char unit = static_cast<char>(std::toupper(static_cast<unsigned char>(label.back())));
  double count = 0.0;
  if (!csv::parse_double(std::string_view(label).substr(0, label.size() - 1), count) || count <= 0.0)
    fail(ErrorCode::TenorParseError, "'" + label + "'");
  switch (unit) {
    case 'D': return count / 360.0;
    case 'W': return 7.0 * count / 360.0;
    case 'M': return count / 12.0;
    case 'Y': return count;
    default: fail(ErrorCode::TenorParseError, "'" + label + "'");
  }
}

void TenorGrid::validate() const {
  if (labels.size() != times.size())
    fail(ErrorCode::InvalidArgument, "tenor labels and times differ in length");
  if (times.size() < 2) fail(ErrorCode::InvalidArgument, "tenor grid needs at least 2 points");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] < 0.0 || (times[j] == 0.0 && j != 0))
      fail(ErrorCode::TenorParseError, "tenor '" + labels[j] + "' must have positive maturity");
    if (j > 0 && !(times[j] > times[j - 1]))
      fail(ErrorCode::TenorParseError, "tenor times must be strictly increasing at '" + labels[j] + "'");
  }
}

TenorGrid TenorGrid::from_labels(const std::vector<std::string>& labels) {
  TenorGrid grid;
  grid.labels = labels;
  grid.times.reserve(labels.size());
  for (const auto& l : labels) grid.times.push_back(parse_tenor(l));
  grid.validate();
  return grid;
}

TenorGrid TenorGrid::head(std::size_t count) const {
  if (count == 0 || count > size()) fail(ErrorCode::InvalidArgument, "tenor head count out of range");
  TenorGrid g;
  g.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  g.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(count));
  return g;
}

namespace {

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace

void RateHistory::validate() const {
  grid.validate();
  if (rates.cols() != static_cast<Eigen::Index>(grid.size()))
    fail(ErrorCode::InvalidArgument, "rate matrix width does not match tenor grid");
  if (rates.rows() < 2) fail(ErrorCode::InvalidArgument, "rate history needs at least 2 observations");
  if (observation_dates.size() != static_cast<std::size_t>(rates.rows()))
    fail(ErrorCode::InvalidArgument, "observation date count does not match rate rows");
  for (std::size_t i = 1; i < observation_dates.size(); ++i)
    if (!(observation_dates[i] > observation_dates[i - 1]))
      fail(ErrorCode::NonMonotonicDates, "row " + std::to_string(i + 1) + " date " + observation_dates[i]);
  if (!rates.allFinite()) fail(ErrorCode::MissingValue, "non-finite rate");
}

RateHistory load_rate_history(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MissingValue, path.string() + ": empty file");
  auto header = csv::split_line(line);
  if (header.empty() || header.front() != "date")
    fail(ErrorCode::TenorParseError, path.string() + ":1: header must start with 'date'");
  header.erase(header.begin());
  RateUnit unit = RateUnit::Decimal;
  if (!header.empty() && header.back().rfind("unit=", 0) == 0) {
    const auto u = header.back().substr(5);
    if (u == "percent") unit = RateUnit::Percent;
    else if (u == "decimal") unit = RateUnit::Decimal;
    else fail(ErrorCode::TenorParseError, path.string() + ":1: unknown unit '" + u + "'");
    header.pop_back();
  }
  RateHistory history;
  history.grid = TenorGrid::from_labels(header);
  const std::size_t m = header.size();

  std::vector<double> flat;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split_line(line);
    if (fields.size() > m + 1) {
      fail(ErrorCode::MissingValue, path.string() + ":" + std::to_string(line_no) + ": too many fields");
    }
    fields.resize(m + 1);
    if (!is_iso_date(fields[0]))
      fail(ErrorCode::NonMonotonicDates,
           path.string() + ":" + std::to_string(line_no) + ": invalid date '" + fields[0] + "'");
    history.observation_dates.push_back(fields[0]);
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      if (!csv::parse_double(fields[j + 1], v)) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": row " << row + 1 << ", column " << j + 1 << " ("
            << header[j] << ")";
        fail(ErrorCode::MissingValue, msg.str());
      }
      flat.push_back(unit == RateUnit::Percent ? v / 100.0 : v);
    }
    ++row;
  }
  history.rates.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < m; ++j)
      history.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * m + j];
  history.validate();
  return history;
}

void write_rate_history(const RateHistory& history, const std::filesystem::path& path) {
  history.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "date";
  for (const auto& l : history.grid.labels) out << ',' << l;
  out << ",unit=decimal\n";
  for (Eigen::Index i = 0; i < history.rates.rows(); ++i) {
    out << history.observation_dates[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < history.rates.cols(); ++j) out << ',' << csv::format_double(history.rates(i, j));
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

ShiftedHistory positivity_shift(const RateHistory& history, double shift_epsilon) {
  ShiftedHistory result{history, 0.0};
  const double lowest = history.rates.minCoeff();
  if (lowest <= 0.0) {
    if (!(shift_epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "shift_epsilon must be positive");
    result.gamma = std::max(0.0, -lowest) + shift_epsilon;
    result.shifted.rates.array() += result.gamma;
  }
  return result;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const char* where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(ErrorCode::InvalidArgument, std::string("unknown config key '") + it.key() + "' in " + where);
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

template <typename T>
void read_nullable(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_null()) out.reset();
    else out = it->get<T>();
  }
}

nlohmann::json nullable(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{
      {"shift_epsilon", c.shift_epsilon},
      {"energy_level", c.energy_level},
      {"seed", c.seed},
      {"bootstrap_count", c.bootstrap_count},
      {"holding_period_days", c.holding_period_days},
      {"pca_components", c.pca_components},
      {"greedy",
       {{"I_max", c.greedy.I_max},
        {"C", c.greedy.C},
        {"C_0", c.greedy.C_0},
        {"C_k", c.greedy.C_k},
        {"eps_tol", c.greedy.eps_tol},
        {"e_max_tol", c.greedy.e_max_tol},
        {"pcr_components", c.greedy.pcr_components},
        {"residual_aggregation", c.greedy.residual_aggregation}}},
      {"fdm",
       {{"M", c.fdm.M},
        {"theta", c.fdm.theta},
        {"dt_days", c.fdm.dt_days},
        {"r_min", nullable(c.fdm.r_min)},
        {"r_max", nullable(c.fdm.r_max)},
        {"checkpoint_days", c.fdm.checkpoint_days},
        {"march", c.fdm.march}}},
      {"tikhonov_mu", nullable(c.tikhonov_mu)},
      {"return_formula", c.return_formula},
      {"forward_adjustment", c.forward_adjustment},
      {"yield_convention", c.yield_convention},
      {"statics", {{"b", c.statics.b}, {"sigma", c.statics.sigma}}},
      {"calibration_tenors", c.calibration_tenors},
      {"horizons", c.horizons},
      {"horizon_mode", c.horizon_mode},
      {"workers", c.workers},
  };
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  reject_unknown(j,
                 {"shift_epsilon", "energy_level", "seed", "bootstrap_count", "holding_period_days",
                  "pca_components", "greedy", "fdm", "tikhonov_mu", "return_formula", "forward_adjustment",
                  "yield_convention", "statics", "calibration_tenors", "horizons", "horizon_mode", "workers"},
                 "config");
  read_opt(j, "shift_epsilon", c.shift_epsilon);
  read_opt(j, "energy_level", c.energy_level);
  read_opt(j, "seed", c.seed);
  read_opt(j, "bootstrap_count", c.bootstrap_count);
  read_opt(j, "holding_period_days", c.holding_period_days);
  read_opt(j, "pca_components", c.pca_components);
  if (auto g = j.find("greedy"); g != j.end()) {
    reject_unknown(*g, {"I_max", "C", "C_0", "C_k", "eps_tol", "e_max_tol", "pcr_components", "residual_aggregation"},
                   "greedy");
    read_opt(*g, "I_max", c.greedy.I_max);
    read_opt(*g, "C", c.greedy.C);
    read_opt(*g, "C_0", c.greedy.C_0);
    read_opt(*g, "C_k", c.greedy.C_k);
    read_opt(*g, "eps_tol", c.greedy.eps_tol);
    read_opt(*g, "e_max_tol", c.greedy.e_max_tol);
    read_opt(*g, "pcr_components", c.greedy.pcr_components);
    read_opt(*g, "residual_aggregation", c.greedy.residual_aggregation);
  }
  if (auto f = j.find("fdm"); f != j.end()) {
    reject_unknown(*f, {"M", "theta", "dt_days", "r_min", "r_max", "checkpoint_days", "march"}, "fdm");
    read_opt(*f, "M", c.fdm.M);
    read_opt(*f, "theta", c.fdm.theta);
    read_opt(*f, "dt_days", c.fdm.dt_days);
    read_nullable(*f, "r_min", c.fdm.r_min);
    read_nullable(*f, "r_max", c.fdm.r_max);
    read_opt(*f, "checkpoint_days", c.fdm.checkpoint_days);
    read_opt(*f, "march", c.fdm.march);
  }
  read_nullable(j, "tikhonov_mu", c.tikhonov_mu);
  read_opt(j, "return_formula", c.return_formula);
  read_opt(j, "forward_adjustment", c.forward_adjustment);
  read_opt(j, "yield_convention", c.yield_convention);
  if (auto s = j.find("statics"); s != j.end()) {
    reject_unknown(*s, {"b", "sigma"}, "statics");
    read_opt(*s, "b", c.statics.b);
    read_opt(*s, "sigma", c.statics.sigma);
  }
  read_opt(j, "calibration_tenors", c.calibration_tenors);
  read_opt(j, "horizons", c.horizons);
  read_opt(j, "horizon_mode", c.horizon_mode);
  read_opt(j, "workers", c.workers);
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidArgument, what);
  };
  check(bootstrap_count >= 1, "bootstrap_count must be >= 1");
  check(holding_period_days >= 1, "holding_period_days must be >= 1");
  check(fdm.M >= 3, "fdm.M must be >= 3");
  check(fdm.theta >= 0.0 && fdm.theta <= 1.0, "fdm.theta must lie in [0, 1]");
  check(fdm.dt_days >= 1, "fdm.dt_days must be >= 1");
  check(fdm.checkpoint_days >= 1, "fdm.checkpoint_days must be >= 1");
  check(fdm.r_min.has_value() == fdm.r_max.has_value(), "fdm.r_min and fdm.r_max must be set together");
  check(!fdm.r_min || *fdm.r_min < *fdm.r_max, "fdm.r_min must be below fdm.r_max");
  check(energy_level > 0.0 && energy_level <= 100.0, "energy_level must lie in (0, 100]");
  check(shift_epsilon > 0.0, "shift_epsilon must be positive");
  check(pca_components >= 0, "pca_components must be >= 0");
  check(greedy.I_max >= 1, "greedy.I_max must be >= 1");
  check(greedy.C >= 1, "greedy.C must be >= 1");
  check(greedy.C_k >= 1, "greedy.C_k must be >= 1");
  check(greedy.C_0 >= 1 && greedy.C > greedy.C_0, "greedy.C must exceed greedy.C_0");
  check(greedy.pcr_components >= 1, "greedy.pcr_components must be >= 1");
  check(!tikhonov_mu || *tikhonov_mu >= 0.0, "tikhonov_mu must be >= 0");
  check(statics.b > 0.0 && statics.sigma >= 0.0, "statics need b > 0 and sigma >= 0");
  check(calibration_tenors >= 0, "calibration_tenors must be >= 0");
  check(workers >= 0, "workers must be >= 0");
  for (double h : horizons) check(h > 0.0, "horizons must be positive");
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  PipelineConfig c;
  try {
    from_json(j, c);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << nlohmann::json(config).dump(2) << '\n';
}

}  // namespace hwmor
