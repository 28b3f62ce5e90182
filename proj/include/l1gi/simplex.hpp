#pragma once

#include <Eigen/Dense>

#include <vector>

namespace l1gi {

/// min c^T x  s.t.  A x = b,  lower <= x <= upper  (bounds may be infinite).
struct BoundedLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct SimplexOptions {
  long max_iterations = 1'000'000;
  double pivot_tol = 1e-9;
  double cost_tol = 1e-10;
  double feasibility_tol = 1e-9;
  int bland_after = 50;  // consecutive degenerate pivots before switching to Bland
};

enum class LpStatus { Optimal, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  Eigen::VectorXd x;
  Eigen::VectorXd duals;        // y with reduced costs d = c - A^T y
  std::vector<int> basis;       // basic column per row
  std::vector<bool> is_basic;   // per column
  double objective = 0.0;
  long iterations = 0;
};

/// Dense revised simplex for bounded variables. Pricing is Dantzig (largest
/// improving reduced cost) until `bland_after` degenerate pivots in a row,
/// then Bland's rule (lowest-index improving column) until a pivot makes
/// progress. Ratio-test ties always go to the lowest-index basic column. A
/// nonbasic column whose own bound range is the binding ratio flips bounds
/// without a pivot.
///
/// `initial_basis` lists one column per row; with all nonbasic columns at
/// their finite lower bound (upper if the lower is infinite, zero if free)
/// the implied basic values must satisfy their bounds. Throws NumericalError
/// if they do not or if the basis matrix is singular.
LpSolution solve_bounded_lp(const BoundedLp& lp, std::vector<int> initial_basis, const SimplexOptions& options = {});

}  // namespace l1gi
