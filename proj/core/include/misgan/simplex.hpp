#pragma once

#include <Eigen/Dense>

namespace misgan {

struct LpResult {
  enum class Status { kOptimal, kInfeasible, kUnbounded };
  Status status = Status::kInfeasible;
  double objective = 0.0;
  Eigen::VectorXd solution;
};

/// Solve min c'x subject to A x = b, x >= 0 with a two-phase primal simplex.
/// Pivoting uses Bland's rule throughout, so the method terminates even on
/// degenerate problems. Redundant equality rows are dropped after phase 1.
LpResult solve_lp_min(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, double feas_tol = 1e-9);

}  // namespace misgan
