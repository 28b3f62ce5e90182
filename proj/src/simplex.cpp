#include "l1gi/simplex.hpp"

#include "l1gi/error.hpp"

#include <cmath>
#include <limits>

namespace l1gi {

LpSolution solve_bounded_lp(const BoundedLp& lp, std::vector<int> basis, const SimplexOptions& opt) {
  using Eigen::Index;
  const Index m = lp.A.rows(), n = lp.A.cols();
  if (lp.b.size() != m || lp.c.size() != n || lp.lower.size() != n || lp.upper.size() != n)
    throw DomainError("simplex: inconsistent problem dimensions");
  if (static_cast<Index>(basis.size()) != m) throw DomainError("simplex: initial basis must have one column per row");

  std::vector<bool> is_basic(static_cast<std::size_t>(n), false);
  for (int j : basis) {
    if (j < 0 || j >= n || is_basic[static_cast<std::size_t>(j)]) throw DomainError("simplex: invalid initial basis");
    is_basic[static_cast<std::size_t>(j)] = true;
  }

  Eigen::VectorXd x(n);
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(lp.lower(j)))
      x(j) = lp.lower(j);
    else if (std::isfinite(lp.upper(j)))
      x(j) = lp.upper(j);
    else
      x(j) = 0.0;
  }

  Eigen::MatrixXd B(m, m);
  Eigen::VectorXd c_b(m), y(m), alpha(m), rhs(m);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  auto factor_and_solve = [&]() {
    for (Index i = 0; i < m; ++i) {
      B.col(i) = lp.A.col(basis[static_cast<std::size_t>(i)]);
      c_b(i) = lp.c(basis[static_cast<std::size_t>(i)]);
    }
    lu.compute(B);
    if (!(std::abs(lu.determinant()) > 0.0) || !std::isfinite(lu.rcond()) || lu.rcond() < 1e-14)
      throw NumericalError("simplex: basis matrix is singular");
    rhs = lp.b;
    for (Index j = 0; j < n; ++j)
      if (!is_basic[static_cast<std::size_t>(j)] && x(j) != 0.0) rhs.noalias() -= lp.A.col(j) * x(j);
    const Eigen::VectorXd xb = lu.solve(rhs);
    for (Index i = 0; i < m; ++i) x(basis[static_cast<std::size_t>(i)]) = xb(i);
    y = lu.transpose().solve(c_b);
  };

  factor_and_solve();
  for (Index i = 0; i < m; ++i) {
    const int j = basis[static_cast<std::size_t>(i)];
    const double tol = opt.feasibility_tol * (1.0 + std::abs(x(j)));
    if (x(j) < lp.lower(j) - tol || x(j) > lp.upper(j) + tol)
      throw NumericalError("simplex: initial basis is not primal feasible");
  }

  LpSolution sol;
  Eigen::VectorXd d(n);
  int degenerate_streak = 0;
  bool prices_stale = true;  // y only changes on a pivot, so bound flips reuse d
  for (long iter = 0; iter < opt.max_iterations; ++iter) {
    // Dantzig pricing; Bland (first improving column) while degenerate pivots
    // keep piling up, which rules out cycling.
    const bool bland = degenerate_streak >= opt.bland_after;
    if (prices_stale) d.noalias() = lp.c - lp.A.transpose() * y;
    prices_stale = false;
    Index enter = -1;
    double dir = 0.0, best = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (is_basic[static_cast<std::size_t>(j)] || lp.lower(j) == lp.upper(j)) continue;
      const double tol = opt.cost_tol * (1.0 + std::abs(lp.c(j)));
      double s = 0.0;
      if (d(j) < -tol && x(j) < lp.upper(j))
        s = 1.0;
      else if (d(j) > tol && x(j) > lp.lower(j))
        s = -1.0;
      if (s == 0.0 || std::abs(d(j)) <= best) continue;
      enter = j;
      dir = s;
      best = std::abs(d(j));
      if (bland) break;
    }
    if (enter < 0) {
      sol.status = LpStatus::Optimal;
      sol.iterations = iter;
      break;
    }

    alpha = lu.solve(lp.A.col(enter));
    // x_B moves by -dir * t * alpha as x_enter moves by dir * t.
    const double t_flip = lp.upper(enter) - lp.lower(enter);
    double t_min = std::numeric_limits<double>::infinity();
    Index leave_row = -1;
    int leave_col = std::numeric_limits<int>::max();
    for (Index i = 0; i < m; ++i) {
      const double delta = -dir * alpha(i);
      if (std::abs(delta) <= opt.pivot_tol) continue;
      const int j = basis[static_cast<std::size_t>(i)];
      double t;
      if (delta < 0.0) {
        if (!std::isfinite(lp.lower(j))) continue;
        t = (x(j) - lp.lower(j)) / -delta;
      } else {
        if (!std::isfinite(lp.upper(j))) continue;
        t = (lp.upper(j) - x(j)) / delta;
      }
      t = std::max(t, 0.0);
      const double slack = 1e-12 * (1.0 + std::abs(t));
      if (t < t_min - slack || (t <= t_min + slack && j < leave_col)) {
        t_min = std::min(t_min, t);
        leave_row = i;
        leave_col = j;
      }
    }
    if (!std::isfinite(t_flip) && leave_row < 0) {
      sol.status = LpStatus::Unbounded;
      sol.iterations = iter;
      break;
    }
    sol.iterations = iter + 1;

    if (t_flip <= t_min) {
      // Bound flip: basis unchanged, so no refactorization.
      x(enter) = dir > 0 ? lp.upper(enter) : lp.lower(enter);
      for (Index i = 0; i < m; ++i) x(basis[static_cast<std::size_t>(i)]) -= dir * t_flip * alpha(i);
      degenerate_streak = 0;
      continue;
    }
    degenerate_streak = t_min <= 1e-12 ? degenerate_streak + 1 : 0;
    const double delta = -dir * alpha(leave_row);
    x(leave_col) = delta < 0.0 ? lp.lower(leave_col) : lp.upper(leave_col);
    is_basic[static_cast<std::size_t>(leave_col)] = false;
    is_basic[static_cast<std::size_t>(enter)] = true;
    basis[static_cast<std::size_t>(leave_row)] = static_cast<int>(enter);
    factor_and_solve();  // entering value comes out of the fresh solve
    prices_stale = true;
  }

  sol.x = x;
  sol.duals = y;
  sol.basis = basis;
  sol.is_basic = is_basic;
  sol.objective = lp.c.dot(x);
  return sol;
}

}  // namespace l1gi
