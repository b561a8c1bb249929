#pragma once

#include <Eigen/Dense>

namespace hwmor {

/// Row i holds lower(i) at column i-1, diag(i) at i, upper(i) at i+1.
/// lower(0) and upper(n-1) are ignored.
struct Tridiagonal {
  Eigen::VectorXd lower;
  Eigen::VectorXd diag;
  Eigen::VectorXd upper;

  Tridiagonal() = default;
  explicit Tridiagonal(Eigen::Index n)
      : lower(Eigen::VectorXd::Zero(n)), diag(Eigen::VectorXd::Zero(n)), upper(Eigen::VectorXd::Zero(n)) {}

  static Tridiagonal identity(Eigen::Index n);

  Eigen::Index size() const noexcept { return diag.size(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// this * Q for a dense M x d block.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& Q) const;
  Eigen::MatrixXd dense() const;
  void set_row(Eigen::Index i, double lo, double d, double up);
};

/// Thomas elimination without pivoting, factored once and reused.
class ThomasFactor {
 public:
  ThomasFactor() = default;
  explicit ThomasFactor(const Tridiagonal& A);

  void solve_in_place(Eigen::VectorXd& x) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd inv_pivot_;
  Eigen::VectorXd upper_;  // scaled by the pivot inverse
};

}  // namespace hwmor
