#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "hwmor/errors.hpp"
#include "hwmor/fdm.hpp"
#include "hwmor/report.hpp"
#include "hwmor/tridiagonal.hpp"

using namespace hwmor;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hwmor::Error thrown";
  return ErrorCode::InvalidArgument;
}

ParameterGroup constant_rho(double a) {
  ParameterGroup rho;
  rho.drift.values = Eigen::VectorXd::Constant(1, a);
  rho.drift.times = {10.0};
  return rho;
}

}  // namespace

TEST(Thomas, MatchesDenseSolve) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3, 10, 257}) {
    Tridiagonal T(n);
    for (int i = 0; i < n; ++i) T.set_row(i, u(rng), 4.0 + u(rng), u(rng));
    Eigen::VectorXd b(n);
    for (auto& v : b) v = u(rng);
    const Eigen::VectorXd dense = T.dense().partialPivLu().solve(b);
    EXPECT_LT((ThomasFactor(T).solve(b) - dense).cwiseAbs().maxCoeff(), 1e-12) << n;
    EXPECT_LT((T.apply(b) - T.dense() * b).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Thomas, ZeroPivotIsReported) {
  Tridiagonal T(2);
  T.set_row(0, 0.0, 0.0, 1.0);
  T.set_row(1, 1.0, 1.0, 0.0);
  EXPECT_EQ(code_of([&] { ThomasFactor f(T); }), ErrorCode::SolveFailure);
}

TEST(RateGrid, UniformAndSymmetric) {
  const auto g = uniform_rate_grid(-0.1, 0.1, 601);
  EXPECT_EQ(g.size(), 601);
  EXPECT_EQ(g.lo(), -0.1);
  EXPECT_EQ(g.hi(), 0.1);
  EXPECT_NEAR(g.dx, 0.2 / 600, 1e-18);
  EXPECT_NEAR(g.points(300), 0.0, 1e-15);

  HullWhiteStatics s{0.015, 0.006, 0.0};
  const auto w = build_rate_grid(s, 0.01, 4.0, 101);
  EXPECT_NEAR(w.u, 0.01 + 7 * 0.006 * 2.0, 1e-15);
  EXPECT_NEAR(w.v, 0.01 - 7 * 0.006 * 2.0, 1e-15);
  EXPECT_NEAR(w.lo(), w.v, 1e-15);

  EXPECT_EQ(code_of([] { uniform_rate_grid(0.0, 1.0, 2); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { uniform_rate_grid(0.1, 0.1, 10); }), ErrorCode::DegenerateDomain);
  EXPECT_EQ(code_of([] { build_rate_grid({0.015, 0.0, 0.0}, 0.0, 1.0, 10); }), ErrorCode::DegenerateDomain);
}

TEST(TimeAxis, FloaterDailySchedule) {
  const InstrumentSpec spec;
  const auto axis = make_time_axis(spec, 1, 30);
  EXPECT_EQ(axis.steps, 3600);
  EXPECT_EQ(axis.coupon_every, 90);
  EXPECT_EQ(axis.checkpoint_every, 30);
  EXPECT_EQ(axis.checkpoint_count(), 121);
  EXPECT_EQ(axis.checkpoint_at(5.0), 60);
  EXPECT_EQ(axis.checkpoint_at(10.0), 120);
  EXPECT_TRUE(axis.is_coupon_step(90));
  EXPECT_FALSE(axis.is_coupon_step(0));
  EXPECT_FALSE(axis.is_coupon_step(91));
}

TEST(TimeAxis, MisalignedSchedulesAreRejected) {
  const InstrumentSpec spec;
  EXPECT_EQ(code_of([&] { make_time_axis(spec, 7, 28); }), ErrorCode::ScheduleMismatch);
  EXPECT_EQ(code_of([&] { make_time_axis(spec, 1, 7); }), ErrorCode::ScheduleMismatch);
  const auto axis = make_time_axis(spec, 1, 30);
  EXPECT_EQ(code_of([&] { (void)axis.checkpoint_at(5.01); }), ErrorCode::ScheduleMismatch);
}

TEST(SpatialOperator, ExactOnAffineFunctions) {
  const auto g = uniform_rate_grid(-0.1, 0.1, 41);
  const double a = 0.0005, b = 0.015, sigma = 0.006;
  const auto L = spatial_operator(g, a, b, sigma);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.size());
  const Eigen::VectorXd r = g.points;
  const Eigen::VectorXd L1 = L.apply(one);
  const Eigen::VectorXd Lr = L.apply(r);
  for (Eigen::Index i = 1; i + 1 < g.size(); ++i) {
    const double x = g.points(i);
    EXPECT_NEAR(L1(i), -x, 1e-12) << i;
    EXPECT_NEAR(Lr(i), (a - b * x) - x * x, 1e-12) << i;
  }
}

TEST(SpatialOperator, UpwindSideFollowsConvectionSign) {
  const auto g = uniform_rate_grid(-0.1, 0.1, 21);
  const double a = 0.0, b = 0.015, sigma = 0.0;
  const auto L = spatial_operator(g, a, b, sigma);
  for (Eigen::Index i = 1; i + 1 < g.size(); ++i) {
    const double c = a - b * g.points(i);
    if (c > 0.0) {
      EXPECT_LT(L.lower(i), 0.0);
      EXPECT_EQ(L.upper(i), 0.0);
    } else if (c < 0.0) {
      EXPECT_EQ(L.lower(i), 0.0);
      EXPECT_LT(L.upper(i), 0.0);
    }
  }
}

TEST(Operators, BoundaryRows) {
  const auto g = uniform_rate_grid(-0.1, 0.1, 31);
  const auto p = assemble_operators(g, 0.001, 0.002, 0.015, 0.006, 1.0 / 360, 0.5);
  const Eigen::Index n = g.size() - 1;
  EXPECT_EQ(p.A.diag(0), -1.0);
  EXPECT_EQ(p.A.upper(0), 1.0);
  EXPECT_EQ(p.A.lower(n), 1.0);
  EXPECT_EQ(p.A.diag(n), -1.0);
  for (Eigen::Index i : {Eigen::Index{0}, n}) {
    EXPECT_EQ(p.B.diag(i), 0.0);
    EXPECT_EQ(p.B.lower(i), 0.0);
    EXPECT_EQ(p.B.upper(i), 0.0);
  }
  // Interior rows: A = I - theta dt L(a_next), B = I + (1 - theta) dt L(a_now).
  const double dt = 1.0 / 360;
  const auto Ln = spatial_operator(g, 0.002, 0.015, 0.006);
  const auto Lc = spatial_operator(g, 0.001, 0.015, 0.006);
  for (Eigen::Index i = 1; i < n; ++i) {
    EXPECT_NEAR(p.A.diag(i), 1.0 - 0.5 * dt * Ln.diag(i), 1e-14);
    EXPECT_NEAR(p.B.upper(i), 0.5 * dt * Lc.upper(i), 1e-14);
  }
}

TEST(Operators, ScheduleSharesPairsAcrossBuckets) {
  const auto g = uniform_rate_grid(-0.1, 0.1, 31);
  const auto axis = TimeAxis::uniform(10.0, 3600, 90, 30);
  EXPECT_EQ(OperatorSchedule(g, constant_rho(0.001), axis, 0.5).pair_count(), 1u);

  ParameterGroup rho;
  rho.drift.times = {1.0, 5.0, 10.0};
  rho.drift.values = Eigen::Vector3d(0.001, -0.002, 0.003);
  const OperatorSchedule schedule(g, rho, axis, 0.5);
  // three steady pairs plus two bucket transitions
  EXPECT_EQ(schedule.pair_count(), 5u);
  const auto last = schedule.buckets(schedule.pair_of_step(axis.steps - 1));
  EXPECT_EQ(last.first, 2u);
  EXPECT_EQ(last.second, 2u);
}

TEST(Coupon, ClampedBetweenFloorAndCap) {
  InstrumentSpec spec;
  const auto g = uniform_rate_grid(-0.01, 0.04, 6);
  const auto c = coupon_vector(spec, g);
  EXPECT_DOUBLE_EQ(c(0), 0.005 / 4);   // -0.01 floored
  EXPECT_DOUBLE_EQ(c(2), 0.01 / 4);    // inside the collar
  EXPECT_DOUBLE_EQ(c(5), 0.0225 / 4);  // 0.04 capped
  spec.kind = InstrumentKind::ZeroCouponBond;
  EXPECT_EQ(coupon_vector(spec, g), Eigen::VectorXd::Zero(6));
}

TEST(Instrument, Validation) {
  InstrumentSpec spec;
  spec.validate();
  spec.cap_rate = 0.001;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Hdm, ZeroCouponBondMatchesClosedForm) {
  InstrumentSpec bond;
  bond.kind = InstrumentKind::ZeroCouponBond;
  bond.maturity = 5.0;
  const auto rho = constant_rho(0.001);
  const auto g = uniform_rate_grid(-0.1, 0.1, 600);
  const auto sol = price_instrument(bond, rho, g, make_time_axis(bond, 1, 30));
  for (double r : {-0.02, 0.0, 0.01, 0.03}) {
    HullWhiteStatics s{0.015, 0.006, r};
    const double exact = bond_price_closed_form(s, rho.drift, 0.0, bond.maturity);
    EXPECT_NEAR(extract_spot_value(sol.final_values, g, r), exact, 1e-3 * exact) << r;
  }
  EXPECT_EQ(sol.checkpoints.cols(), 61);
  EXPECT_EQ(sol.checkpoints.col(0), Eigen::VectorXd::Ones(600));
  EXPECT_EQ(sol.checkpoints.col(60), sol.final_values);
}

TEST(Hdm, FloaterValuesArePlausible) {
  const InstrumentSpec spec;
  const auto g = uniform_rate_grid(-0.1, 0.1, 200);
  const auto sol = price_instrument(spec, constant_rho(0.0002), g, make_time_axis(spec, 1, 30));
  EXPECT_TRUE(sol.final_values.allFinite());
  const double at_zero = extract_spot_value(sol.final_values, g, 0.0);
  EXPECT_GT(at_zero, 0.9);
  EXPECT_LT(at_zero, 1.2);
  EXPECT_EQ(code_of([&] { extract_spot_value(sol.final_values, g, 0.2); }), ErrorCode::OutOfDomain);
}
