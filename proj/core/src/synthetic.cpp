#include "hwmor/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "hwmor/errors.hpp"
#include "hwmor/random.hpp"

namespace hwmor {

namespace {

std::vector<std::string> business_days(const std::string& start, int count) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    fail(ErrorCode::InvalidArgument, "start date must be YYYY-MM-DD");
  std::chrono::sys_days day{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    const std::chrono::weekday wd{day};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) {
      const std::chrono::year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += std::chrono::days{1};
  }
  return out;
}

}  // namespace

RateHistory synthetic_history(const SyntheticHistoryOptions& options) {
  if (options.periods < 2) fail(ErrorCode::InvalidArgument, "synthetic history needs at least 2 periods");
  if (!(options.short_level > 0.0) || !(options.long_level > 0.0))
    fail(ErrorCode::InvalidArgument, "synthetic rate levels must be positive");

  RateHistory history;
  history.grid = TenorGrid::from_labels(options.labels);
  history.observation_dates = business_days(options.start_date, options.periods);
  const auto m = static_cast<Eigen::Index>(history.grid.size());
  const auto n = static_cast<Eigen::Index>(options.periods);

  Eigen::VectorXd base(m);
  Eigen::MatrixXd loadings(m, 3);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double t = history.grid.times[static_cast<std::size_t>(j)];
    const double slope = std::exp(-t / 6.0);
    base(j) = std::log(options.long_level + (options.short_level - options.long_level) * slope);
    loadings(j, 0) = 1.0;
    loadings(j, 1) = slope;
    loadings(j, 2) = (t / 6.0) * std::exp(1.0 - t / 6.0) - 0.5;
  }

  auto rng = make_stream(options.seed, 0);
  std::normal_distribution<double> normal;
  const double vols[3] = {options.daily_vol, 1.5 * options.daily_vol, 0.8 * options.daily_vol};
  const double reversion[3] = {0.002, 0.004, 0.01};
  double factors[3] = {0.0, 0.0, 0.0};

  history.rates.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) factors[k] += -reversion[k] * factors[k] + vols[k] * normal(rng);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double noise = options.idiosyncratic * options.daily_vol * normal(rng);
      const double x = base(j) + factors[0] * loadings(j, 0) + factors[1] * loadings(j, 1) +
                       factors[2] * loadings(j, 2) + noise;
      history.rates(i, j) = std::exp(x);
    }
  }
  history.validate();
  return history;
}

}  // namespace hwmor
