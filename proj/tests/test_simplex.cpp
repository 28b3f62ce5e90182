#include "l1gi/error.hpp"
#include "l1gi/rng.hpp"
#include "l1gi/simplex.hpp"

#include <doctest.h>

#include <limits>

using namespace l1gi;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack-augmented form of  min c^T x, A x <= b, x in [l, u]  with slacks basic.
BoundedLp with_slacks(const MatrixXd& A, const VectorXd& b, const VectorXd& c, const VectorXd& l, const VectorXd& u) {
  const auto m = A.rows(), n = A.cols();
  BoundedLp lp;
  lp.A.resize(m, n + m);
  lp.A << A, MatrixXd::Identity(m, m);
  lp.b = b;
  lp.c = VectorXd::Zero(n + m);
  lp.c.head(n) = c;
  lp.lower = VectorXd::Zero(n + m);
  lp.upper = VectorXd::Constant(n + m, kInf);
  lp.lower.head(n) = l;
  lp.upper.head(n) = u;
  return lp;
}

std::vector<int> slack_basis(Eigen::Index n, Eigen::Index m) {
  std::vector<int> b;
  for (Eigen::Index i = 0; i < m; ++i) b.push_back(static_cast<int>(n + i));
  return b;
}

// Best box vertex by enumeration of all sign patterns of x (each variable at
// a bound), for problems small enough to enumerate; only used with m = 1.
}  // namespace

TEST_CASE("textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
  MatrixXd A(3, 2);
  A << 1, 0, 0, 2, 3, 2;
  const BoundedLp lp = with_slacks(A, VectorXd((VectorXd(3) << 4, 12, 18).finished()), (VectorXd(2) << -3, -5).finished(),
                                   VectorXd::Zero(2), VectorXd::Constant(2, kInf));
  const LpSolution s = solve_bounded_lp(lp, slack_basis(2, 3));
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x(0) == doctest::Approx(2.0));
  CHECK(s.x(1) == doctest::Approx(6.0));
  CHECK(s.objective == doctest::Approx(-36.0));
  // complementary slackness: reduced costs of nonbasic columns have the right sign
  const VectorXd d = lp.c - lp.A.transpose() * s.duals;
  for (int j = 0; j < 5; ++j)
    if (!s.is_basic[j]) CHECK(d(j) >= -1e-12);
}

TEST_CASE("bounded variables flip without pivoting") {
  // min -x - y, x + y <= 10, 0 <= x, y <= 3  ->  both at the upper bound
  MatrixXd A(1, 2);
  A << 1, 1;
  const BoundedLp lp = with_slacks(A, VectorXd::Constant(1, 10), -VectorXd::Ones(2), VectorXd::Zero(2),
                                   VectorXd::Constant(2, 3));
  const LpSolution s = solve_bounded_lp(lp, slack_basis(2, 1));
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x(0) == 3.0);
  CHECK(s.x(1) == 3.0);
  CHECK(s.basis[0] == 2);  // slack still basic
  CHECK(s.iterations == 2);
}

TEST_CASE("unbounded LP is reported") {
  MatrixXd A(1, 2);
  A << 1, -1;
  const BoundedLp lp = with_slacks(A, VectorXd::Constant(1, 1), (VectorXd(2) << -1, 0).finished(), VectorXd::Zero(2),
                                   VectorXd::Constant(2, kInf));
  CHECK(solve_bounded_lp(lp, slack_basis(2, 1)).status == LpStatus::Unbounded);
}

TEST_CASE("Beale's cycling example terminates") {
  // Classic degenerate LP on which largest-coefficient pricing cycles.
  MatrixXd A(3, 4);
  A << 0.25, -60, -1.0 / 25, 9, 0.5, -90, -1.0 / 50, 3, 0, 0, 1, 0;
  const VectorXd b = (VectorXd(3) << 0, 0, 1).finished();
  const VectorXd c = (VectorXd(4) << -0.75, 150, -1.0 / 50, 6).finished();
  const BoundedLp lp = with_slacks(A, b, c, VectorXd::Zero(4), VectorXd::Constant(4, kInf));
  for (int bland_after : {0, 5, 50}) {
    SimplexOptions opt;
    opt.bland_after = bland_after;
    opt.max_iterations = 1000;
    const LpSolution s = solve_bounded_lp(lp, slack_basis(4, 3), opt);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-0.05).epsilon(1e-12));
  }
}

TEST_CASE("random LPs agree with brute-force vertex enumeration") {
  // min c^T x s.t. A x <= b, 0 <= x <= 1 in two variables: enumerate all
  // pairwise intersections of the constraint lines and box edges.
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const int m = 3;
    MatrixXd A(m, 2);
    VectorXd b(m), c(2);
    for (int i = 0; i < m; ++i) {
      A(i, 0) = rng.normal(), A(i, 1) = rng.normal();
      b(i) = 0.2 + rng.uniform();
    }
    c << rng.normal(), rng.normal();
    const BoundedLp lp = with_slacks(A, b, c, VectorXd::Zero(2), VectorXd::Ones(2));
    const LpSolution s = solve_bounded_lp(lp, slack_basis(2, m));
    REQUIRE(s.status == LpStatus::Optimal);

    MatrixXd lines(m + 4, 2);
    VectorXd rhs(m + 4);
    lines.topRows(m) = A;
    rhs.head(m) = b;
    lines.bottomRows(4) << 1, 0, 0, 1, 1, 0, 0, 1;
    rhs.tail(4) << 0, 0, 1, 1;
    double best = kInf;
    for (int i = 0; i < m + 4; ++i)
      for (int j = i + 1; j < m + 4; ++j) {
        Eigen::Matrix2d M;
        M << lines.row(i), lines.row(j);
        if (std::abs(M.determinant()) < 1e-12) continue;
        const Eigen::Vector2d v = M.partialPivLu().solve(Eigen::Vector2d(rhs(i), rhs(j)));
        if ((v.array() < -1e-12).any() || (v.array() > 1 + 1e-12).any()) continue;
        if (((A * v - b).array() > 1e-12).any()) continue;
        best = std::min(best, c.dot(v));
      }
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("bad inputs") {
  BoundedLp lp;
  lp.A = MatrixXd::Identity(2, 2);
  lp.b = VectorXd::Ones(2);
  lp.c = VectorXd::Zero(2);
  lp.lower = VectorXd::Zero(2);
  lp.upper = VectorXd::Constant(2, 0.5);
  CHECK_THROWS_AS(solve_bounded_lp(lp, {0}), DomainError);
  CHECK_THROWS_AS(solve_bounded_lp(lp, {0, 0}), DomainError);
  // basic values 1 exceed the upper bound 0.5
  CHECK_THROWS_AS(solve_bounded_lp(lp, {0, 1}), NumericalError);
}
