#include "hwmor/greedy.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hwmor/errors.hpp"
#include "hwmor/parallel.hpp"
#include "hwmor/random.hpp"

namespace hwmor {

HullWhiteProblem::HullWhiteProblem(const ParameterSpace& space, InstrumentSpec spec, RateGrid grid, TimeAxis axis,
                                   SolverSettings solver, RomSettings rom)
    : space_(space),
      spec_(std::move(spec)),
      grid_(std::move(grid)),
      axis_(axis),
      solver_(solver),
      rom_(rom) {
  rom_.keep_trajectory = false;
}

Eigen::MatrixXd HullWhiteProblem::full_snapshots(std::size_t index) const {
  return price_instrument(spec_, space_.group(index), grid_, axis_, solver_).checkpoints;
}

void HullWhiteProblem::set_basis(const Eigen::MatrixXd& Q) {
  model_.emplace(Q, grid_, spec_, axis_, space_.b, space_.sigma, solver_);
}

RomEvaluation HullWhiteProblem::reduced(std::size_t index, bool lift) const {
  if (!model_) fail(ErrorCode::InvalidArgument, "reduced solve requested before a basis was set");
  RomSettings settings = rom_;
  settings.lift = lift;
  auto sol = solve_rom(*model_, space_.group(index), settings);
  RomEvaluation out;
  out.epsilon = sol.epsilon;
  if (lift) out.lifted = std::move(sol.lifted);
  return out;
}

// ---------------------------------------------------------------------------
// surrogate

double SurrogateModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& a) const {
  double z = 0.0;
  for (Eigen::Index j = 0; j < eta.size(); ++j)
    if (eta(j) != 0.0) z += eta(j) * (a(j) - x_mean(j)) / x_scale(j);
  return y_mean + y_scale * z;
}

SurrogateModel fit_pcr_surrogate(const Eigen::MatrixXd& design, const Eigen::VectorXd& eps, int p) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  if (eps.size() != n || n < 2) fail(ErrorCode::InvalidArgument, "PCR needs at least 2 rows matching the response");
  if (p < 1 || p > m) fail(ErrorCode::InvalidArgument, "PCR component count must lie in [1, m]");

  SurrogateModel model;
  model.x_mean = design.colwise().mean().transpose();
  model.x_scale = Eigen::VectorXd::Ones(m);
  model.eta = Eigen::VectorXd::Zero(m);
  model.y_mean = eps.mean();
  const double y_sd = std::sqrt((eps.array() - model.y_mean).square().sum() / static_cast<double>(n - 1));
  model.y_scale = y_sd > 0.0 ? y_sd : 1.0;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double sd =
        std::sqrt((design.col(j).array() - model.x_mean(j)).square().sum() / static_cast<double>(n - 1));
    if (sd > 1e-14 * std::max(1.0, std::abs(model.x_mean(j)))) {
      model.x_scale(j) = sd;
      kept.push_back(j);
    } else {
      model.dropped_columns.push_back(j);
    }
  }
  if (kept.empty() || !(y_sd > 0.0)) return model;

  const auto k = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd X(n, k);
  for (Eigen::Index c = 0; c < k; ++c)
    X.col(c) = (design.col(kept[static_cast<std::size_t>(c)]).array() - model.x_mean(kept[static_cast<std::size_t>(c)])) /
               model.x_scale(kept[static_cast<std::size_t>(c)]);
  const Eigen::VectorXd y = (eps.array() - model.y_mean) / model.y_scale;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& S = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < S.size() && S(rank) > 1e-12 * S(0)) ++rank;
  const Eigen::Index use = std::min<Eigen::Index>({p, n - 1, k, rank});
  model.kept_components = static_cast<int>(use);
  if (use == 0) return model;

  // Z = X Psi_p = U_p S_p has orthogonal columns, so the least-squares
  // coefficients decouple: omega_j = u_j^T y / s_j.
  const Eigen::VectorXd omega =
      (svd.matrixU().leftCols(use).transpose() * y).cwiseQuotient(S.head(use));
  const Eigen::VectorXd eta_kept = svd.matrixV().leftCols(use) * omega;
  for (Eigen::Index c = 0; c < k; ++c) model.eta(kept[static_cast<std::size_t>(c)]) = eta_kept(c);
  return model;
}

Eigen::VectorXd evaluate_surrogate(const SurrogateModel& model, const Eigen::MatrixXd& space) {
  if (space.cols() != model.eta.size()) fail(ErrorCode::InvalidArgument, "surrogate width does not match the space");
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(model.eta.size());
  double shift = 0.0;
  for (Eigen::Index j = 0; j < model.eta.size(); ++j) {
    if (model.eta(j) == 0.0) continue;
    weights(j) = model.eta(j) / model.x_scale(j);
    shift += weights(j) * model.x_mean(j);
  }
  return ((space * weights).array() - shift) * model.y_scale + model.y_mean;
}

std::vector<std::size_t> top_candidates(const Eigen::VectorXd& predictions, std::size_t count,
                                        const std::vector<std::size_t>& exclude) {
  std::vector<char> skip(static_cast<std::size_t>(predictions.size()), 0);
  for (auto i : exclude)
    if (i < skip.size()) skip[i] = 1;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < skip.size(); ++i)
    if (!skip[i]) order.push_back(i);
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double pa = predictions(static_cast<Eigen::Index>(a));
                      const double pb = predictions(static_cast<Eigen::Index>(b));
                      return pa > pb || (pa == pb && a < b);
                    });
  order.resize(count);
  return order;
}

ErrorModel fit_error_model(const std::vector<ErrorPoint>& points) {
  if (points.size() < 2) fail(ErrorCode::InvalidArgument, "error model needs at least 2 points");
  ErrorModel model;
  model.points = points;
  const auto n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& pt : points) {
    if (!(pt.error > 0.0) || !(pt.estimator > 0.0))
      fail(ErrorCode::NonPositiveError, "error model points must be positive");
    mx += std::log(pt.estimator);
    my += std::log(pt.error);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& pt : points) {
    const double dx = std::log(pt.estimator) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(pt.error) - my);
  }
  model.gamma = sxx > 0.0 ? sxy / sxx : 0.0;
  model.log_tau = my - model.gamma * mx;
  model.fitted = true;
  return model;
}

// ---------------------------------------------------------------------------
// samplers

namespace {

constexpr std::uint64_t kClassicalStream = 0x636c617373696361ULL;
constexpr std::uint64_t kAdaptiveStream = 0x6164617074697665ULL;

std::vector<double> evaluate_estimators(const SnapshotProblem& problem, const std::vector<std::size_t>& indices,
                                        unsigned workers) {
  std::vector<double> eps(indices.size());
  parallel_for(indices.size(), workers, [&](std::size_t k) { eps[k] = problem.reduced(indices[k], false).epsilon; });
  return eps;
}

struct Selection {
  double max_eps = 0.0;
  double mean_eps = 0.0;
  std::optional<std::size_t> chosen;
  double chosen_eps = 0.0;
};

// Max and mean over all candidates; the chosen group is the maximizer among
// groups not yet in the snapshot set, lower index on ties.
Selection select(const std::vector<std::size_t>& indices, const std::vector<double>& eps,
                 const SnapshotMatrix& snapshots) {
  Selection sel;
  sel.max_eps = *std::max_element(eps.begin(), eps.end());
  sel.mean_eps = std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (snapshots.contains(indices[k])) continue;
    if (!sel.chosen || eps[k] > sel.chosen_eps || (eps[k] == sel.chosen_eps && indices[k] < *sel.chosen)) {
      sel.chosen = indices[k];
      sel.chosen_eps = eps[k];
    }
  }
  return sel;
}

ReducedBasis rebuild(SnapshotProblem& problem, const SnapshotMatrix& snapshots, double energy_level) {
  auto basis = build_basis(snapshots, energy_level);
  problem.set_basis(basis.Q);
  return basis;
}

}  // namespace

GreedyResult classical_greedy(SnapshotProblem& problem, const GreedyConfig& config, double energy_level,
                              std::uint64_t seed, unsigned workers) {
  const std::size_t s = problem.size();
  if (s == 0) fail(ErrorCode::InsufficientSpace, "parameter space is empty");
  if (config.I_max < 1 || config.C < 1) fail(ErrorCode::InvalidArgument, "greedy needs I_max >= 1 and C >= 1");

  GreedyResult result;
  result.trace.strategy = "classical";
  SnapshotMatrix snapshots;
  snapshots.append(0, problem.full_snapshots(0));
  result.basis = rebuild(problem, snapshots, energy_level);

  auto rng = make_stream(seed, kClassicalStream);
  auto p_hat = sample_without_replacement(rng, s, std::min<std::size_t>(static_cast<std::size_t>(config.C), s));
  std::sort(p_hat.begin(), p_hat.end());

  result.trace.terminated_reason = TerminationReason::MaxIterations;
  for (int i = 2; i <= config.I_max; ++i) {
    const auto eps = evaluate_estimators(problem, p_hat, workers);
    const Selection sel = select(p_hat, eps, snapshots);
    GreedyIteration rec;
    rec.iteration = i - 1;
    rec.max_epsilon = sel.max_eps;
    rec.mean_epsilon = sel.mean_eps;
    rec.d = result.basis.d;
    rec.candidates = p_hat.size();
    if (sel.max_eps <= config.eps_tol) {
      result.trace.iterations.push_back(rec);
      result.trace.terminated_reason = TerminationReason::Tolerance;
      break;
    }
    if (!sel.chosen) {
      result.trace.iterations.push_back(rec);
      result.trace.terminated_reason = TerminationReason::Exhausted;
      break;
    }
    rec.selected = sel.chosen;
    result.trace.iterations.push_back(rec);
    snapshots.append(*sel.chosen, problem.full_snapshots(*sel.chosen));
    result.basis = rebuild(problem, snapshots, energy_level);
  }
  return result;
}

GreedyResult adaptive_greedy(SnapshotProblem& problem, const GreedyConfig& config, double energy_level,
                             std::uint64_t seed, unsigned workers) {
  const std::size_t s = problem.size();
  if (config.I_max < 1 || config.C_0 < 1 || config.C_k < 1 || config.C <= config.C_0)
    fail(ErrorCode::InvalidArgument, "adaptive greedy needs I_max >= 1, C_0 >= 1, C_k >= 1 and C > C_0");
  if (s < static_cast<std::size_t>(config.C))
    fail(ErrorCode::InsufficientSpace,
         "parameter space has " + std::to_string(s) + " groups but C = " + std::to_string(config.C));
  const auto C = static_cast<std::size_t>(config.C);
  const Eigen::MatrixXd& design = problem.design();
  const int p = std::min<int>(config.pcr_components, static_cast<int>(design.cols()));

  GreedyResult result;
  result.trace.strategy = "adaptive";
  SnapshotMatrix snapshots;
  snapshots.append(0, problem.full_snapshots(0));
  result.basis = rebuild(problem, snapshots, energy_level);
  std::vector<ErrorPoint> error_points;

  result.trace.terminated_reason = TerminationReason::MaxIterations;
  for (int i = 2; i <= config.I_max; ++i) {
    auto rng = make_stream(seed ^ kAdaptiveStream, static_cast<std::uint64_t>(i));
    std::vector<std::size_t> p_hat = sample_without_replacement(rng, s, static_cast<std::size_t>(config.C_0));
    std::vector<double> eps = evaluate_estimators(problem, p_hat, workers);

    int rounds = 0;
    while (p_hat.size() < C) {
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(p_hat.size()), design.cols());
      for (std::size_t k = 0; k < p_hat.size(); ++k) rows.row(static_cast<Eigen::Index>(k)) = design.row(static_cast<Eigen::Index>(p_hat[k]));
      const Eigen::VectorXd response = Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
      const auto surrogate = fit_pcr_surrogate(rows, response, p);
      const auto predictions = evaluate_surrogate(surrogate, design);
      const auto want = std::min(static_cast<std::size_t>(config.C_k), C - p_hat.size());
      const auto picks = top_candidates(predictions, want, p_hat);
      if (picks.empty()) break;
      const auto fresh = evaluate_estimators(problem, picks, workers);
      p_hat.insert(p_hat.end(), picks.begin(), picks.end());
      eps.insert(eps.end(), fresh.begin(), fresh.end());
      ++rounds;
    }

    const Selection sel = select(p_hat, eps, snapshots);
    GreedyIteration rec;
    rec.iteration = i - 1;
    rec.max_epsilon = sel.max_eps;
    rec.mean_epsilon = sel.mean_eps;
    rec.d = result.basis.d;
    rec.candidates = p_hat.size();
    rec.surrogate_rounds = rounds;
    if (!sel.chosen) {
      result.trace.iterations.push_back(rec);
      result.trace.terminated_reason = TerminationReason::Exhausted;
      break;
    }
    if (result.error_model.fitted && sel.chosen_eps > 0.0) rec.predicted_error = result.error_model.predict(sel.chosen_eps);
    if (i > 2 && rec.predicted_error && *rec.predicted_error <= config.e_max_tol) {
      result.trace.iterations.push_back(rec);
      result.trace.terminated_reason = TerminationReason::Tolerance;
      break;
    }

    const std::size_t chosen = *sel.chosen;
    rec.selected = chosen;
    const Eigen::MatrixXd full = problem.full_snapshots(chosen);
    const auto before = problem.reduced(chosen, true);
    rec.before = ErrorPoint{relative_error(full, before.lifted), before.epsilon};
    snapshots.append(chosen, full);
    result.basis = rebuild(problem, snapshots, energy_level);
    const auto after = problem.reduced(chosen, true);
    rec.after = ErrorPoint{relative_error(full, after.lifted), after.epsilon};
    result.trace.iterations.push_back(rec);

    for (const auto& pt : {*rec.before, *rec.after})
      if (pt.error > 0.0 && pt.estimator > 0.0) error_points.push_back(pt);
    if (error_points.size() >= 2) result.error_model = fit_error_model(error_points);
  }
  result.error_model.points = error_points;
  return result;
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Tolerance: return "tolerance";
    case TerminationReason::MaxIterations: return "max_iterations";
    case TerminationReason::Exhausted: return "exhausted";
  }
  return "unknown";
}

namespace {

nlohmann::json point_json(const std::optional<ErrorPoint>& pt) {
  if (!pt) return nullptr;
  return {{"error", pt->error}, {"estimator", pt->estimator}};
}

}  // namespace

nlohmann::json trace_to_json(const GreedyResult& result) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& rec : result.trace.iterations) {
    iterations.push_back({
        {"iteration", rec.iteration},
        {"selected", rec.selected ? nlohmann::json(*rec.selected) : nlohmann::json(nullptr)},
        {"max_epsilon", rec.max_epsilon},
        {"mean_epsilon", rec.mean_epsilon},
        {"d", rec.d},
        {"candidates", rec.candidates},
        {"surrogate_rounds", rec.surrogate_rounds},
        {"predicted_error", rec.predicted_error ? nlohmann::json(*rec.predicted_error) : nlohmann::json(nullptr)},
        {"before", point_json(rec.before)},
        {"after", point_json(rec.after)},
    });
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : result.error_model.points) points.push_back({{"error", pt.error}, {"estimator", pt.estimator}});
  nlohmann::json model = nullptr;
  if (result.error_model.fitted) model = {{"gamma", result.error_model.gamma}, {"log_tau", result.error_model.log_tau}};
  return {
      {"strategy", result.trace.strategy},
      {"terminated_reason", to_string(result.trace.terminated_reason)},
      {"iterations", iterations},
      {"basis", {{"d", result.basis.d}, {"energy_level", result.basis.energy_level}, {"sources", result.basis.sources}}},
      {"error_model", model},
      {"error_points", points},
  };
}

void write_trace(const GreedyResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << trace_to_json(result).dump(2) << '\n';
}

}  // namespace hwmor
