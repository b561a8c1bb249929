#include "hwmor/tridiagonal.hpp"

#include <cmath>

#include "hwmor/errors.hpp"

namespace hwmor {

Tridiagonal Tridiagonal::identity(Eigen::Index n) {
  Tridiagonal t(n);
  t.diag.setOnes();
  return t;
}

void Tridiagonal::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const Eigen::Index n = size();
  y.resize(n);
  if (n == 1) {
    y(0) = diag(0) * x(0);
    return;
  }
  y(0) = diag(0) * x(0) + upper(0) * x(1);
  for (Eigen::Index i = 1; i + 1 < n; ++i) y(i) = lower(i) * x(i - 1) + diag(i) * x(i) + upper(i) * x(i + 1);
  y(n - 1) = lower(n - 1) * x(n - 2) + diag(n - 1) * x(n - 1);
}

Eigen::VectorXd Tridiagonal::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y;
  apply(x, y);
  return y;
}

Eigen::MatrixXd Tridiagonal::apply(const Eigen::MatrixXd& Q) const {
  const Eigen::Index n = size();
  Eigen::MatrixXd out = diag.asDiagonal() * Q;
  if (n > 1) {
    out.topRows(n - 1) += upper.head(n - 1).asDiagonal() * Q.bottomRows(n - 1);
    out.bottomRows(n - 1) += lower.tail(n - 1).asDiagonal() * Q.topRows(n - 1);
  }
  return out;
}

Eigen::MatrixXd Tridiagonal::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = diag(i);
    if (i > 0) out(i, i - 1) = lower(i);
    if (i + 1 < n) out(i, i + 1) = upper(i);
  }
  return out;
}

void Tridiagonal::set_row(Eigen::Index i, double lo, double d, double up) {
  lower(i) = lo;
  diag(i) = d;
  upper(i) = up;
}

ThomasFactor::ThomasFactor(const Tridiagonal& A) : lower_(A.lower), inv_pivot_(A.size()), upper_(A.upper) {
  const Eigen::Index n = A.size();
  const double scale = A.diag.cwiseAbs().maxCoeff() + A.lower.cwiseAbs().maxCoeff() + A.upper.cwiseAbs().maxCoeff();
  double pivot = A.diag(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) pivot = A.diag(i) - lower_(i) * A.upper(i - 1) * inv_pivot_(i - 1);
    if (!(std::abs(pivot) > 1e-14 * scale))
      fail(ErrorCode::SolveFailure, "zero pivot in tridiagonal elimination at row " + std::to_string(i + 1));
    inv_pivot_(i) = 1.0 / pivot;
  }
  upper_.array() *= inv_pivot_.array();
}

void ThomasFactor::solve_in_place(Eigen::VectorXd& x) const {
  const Eigen::Index n = inv_pivot_.size();
  if (x.size() != n) fail(ErrorCode::InvalidArgument, "tridiagonal solve size mismatch");
  x(0) *= inv_pivot_(0);
  for (Eigen::Index i = 1; i < n; ++i) x(i) = (x(i) - lower_(i) * x(i - 1)) * inv_pivot_(i);
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) -= upper_(i) * x(i + 1);
}

Eigen::VectorXd ThomasFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  solve_in_place(x);
  return x;
}

}  // namespace hwmor
