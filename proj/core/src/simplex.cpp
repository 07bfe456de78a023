#include "misgan/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace misgan {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr std::size_t kMaxPivots = 200000;

struct Tableau {
  // rows: constraints, plus one objective row at the bottom.
  // cols: variables, plus the rhs column at the right.
  Eigen::MatrixXd t;
  std::vector<Eigen::Index> basis;  // basic variable per constraint row

  Eigen::Index rows() const { return t.rows() - 1; }
  Eigen::Index cols() const { return t.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t.row(r) /= t(r, c);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (i == r) continue;
      const double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule: entering = lowest-index column with negative reduced cost;
  // leaving = ratio-test row, ties broken by lowest basic variable index.
  // Returns false at optimality; throws on an unbounded ray.
  bool bland_step() {
    const Eigen::Index m = rows(), n = cols();
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (t(m, j) < -kCostTol) {
        enter = j;
        break;
      }
    if (enter < 0) return false;
    Eigen::Index leave = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double aij = t(i, enter);
      if (aij <= kPivotTol) continue;
      const double ratio = t(i, n) / aij;
      if (leave < 0 || ratio < best_ratio - kPivotTol ||
          (std::abs(ratio - best_ratio) <= kPivotTol &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) throw LpUnboundedError{};
    pivot(leave, enter);
    return true;
  }

  struct LpUnboundedError {};

  void run() {
    for (std::size_t iter = 0; iter < kMaxPivots; ++iter)
      if (!bland_step()) return;
    throw std::logic_error("simplex: pivot limit exceeded");
  }
};

}  // namespace

LpResult solve_lp_min(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c, double feas_tol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n)
    throw std::invalid_argument("solve_lp_min: dimension mismatch");

  // Phase 1: minimize the sum of one artificial variable per row.
  Tableau tab;
  tab.t.setZero(m + 1, n + m + 1);
  tab.t.block(0, 0, m, n) = a;
  tab.t.block(0, n, m, m).setIdentity();
  tab.t.col(n + m).head(m) = b;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.t(i, n + m) < 0.0) {
      tab.t.row(i).head(n) = -tab.t.row(i).head(n);
      tab.t(i, n + m) = -tab.t(i, n + m);
      tab.t(i, n + i) = 1.0;  // keep the artificial column positive
    }
    tab.basis.push_back(n + i);
  }
  // Canonical phase-1 objective: cost 1 on artificials, reduced by the rows
  // that carry them in the basis.
  for (Eigen::Index i = 0; i < m; ++i) tab.t.row(m) -= tab.t.row(i);
  tab.t.row(m).segment(n, m).setZero();

  LpResult result;
  try {
    tab.run();
  } catch (const Tableau::LpUnboundedError&) {
    throw std::logic_error("simplex: phase 1 cannot be unbounded");
  }
  const double phase1 = -tab.t(m, n + m);
  if (phase1 > feas_tol) {
    result.status = LpResult::Status::kInfeasible;
    return result;
  }

  // Drive remaining artificials out of the basis; rows that cannot pivot to
  // a real column are redundant and get dropped.
  std::vector<Eigen::Index> keep_rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) {
      keep_rows.push_back(i);
      continue;
    }
    Eigen::Index j = 0;
    for (; j < n; ++j)
      if (std::abs(tab.t(i, j)) > kPivotTol) break;
    if (j < n) {
      tab.pivot(i, j);
      keep_rows.push_back(i);
    }
  }

  // Phase 2 tableau: real columns only, redundant rows removed.
  Tableau t2;
  const Eigen::Index m2 = static_cast<Eigen::Index>(keep_rows.size());
  t2.t.setZero(m2 + 1, n + 1);
  for (Eigen::Index i = 0; i < m2; ++i) {
    t2.t.row(i).head(n) = tab.t.row(keep_rows[static_cast<std::size_t>(i)]).head(n);
    t2.t(i, n) = tab.t(keep_rows[static_cast<std::size_t>(i)], n + m);
    if (t2.t(i, n) < 0.0) t2.t(i, n) = 0.0;  // clear phase-1 round-off
    t2.basis.push_back(tab.basis[static_cast<std::size_t>(keep_rows[static_cast<std::size_t>(i)])]);
  }
  t2.t.row(m2).head(n) = c;
  for (Eigen::Index i = 0; i < m2; ++i) {
    const double f = t2.t(m2, t2.basis[static_cast<std::size_t>(i)]);
    if (f != 0.0) t2.t.row(m2) -= f * t2.t.row(i);
  }
  try {
    t2.run();
  } catch (const Tableau::LpUnboundedError&) {
    result.status = LpResult::Status::kUnbounded;
    return result;
  }

  result.status = LpResult::Status::kOptimal;
  result.solution.setZero(n);
  for (Eigen::Index i = 0; i < m2; ++i) {
    double v = t2.t(i, n);
    if (v < 0.0) v = 0.0;
    result.solution[t2.basis[static_cast<std::size_t>(i)]] = v;
  }
  result.objective = c.dot(result.solution);
  return result;
}

}  // namespace misgan
