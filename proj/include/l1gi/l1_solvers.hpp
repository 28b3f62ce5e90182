#pragma once

#include "l1gi/core_model.hpp"
#include "l1gi/gauss_moments.hpp"
#include "l1gi/report.hpp"
#include "l1gi/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace l1gi {

/// Labelled sample: X is n x p, y holds +-1.
struct Dataset {
  MatrixXd X;
  VectorXd y;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

/// FNV-1a over the raw bytes of X and y, as 16 hex digits.
std::string fingerprint(const Dataset& data);

/// One penalized fit. lambda multiplies ||b||_1 added to the summed (not
/// averaged) loss; the intercept is unpenalized.
struct PathPoint {
  double lambda = 0.0;
  double intercept = 0.0;
  VectorXd coefficients;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

struct RegularizationPath {
  std::vector<PathPoint> points;  // decreasing lambda
  std::string data_id;
};

struct PathGrid {
  int count = 100;        // K
  double ratio = 1e-3;    // lambda_min / lambda_max
};

/// sign(z) max(|z| - gamma, 0).
inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// ---------------------------------------------------------------------------
// Logistic: proximal Newton with inner cyclic coordinate descent
// ---------------------------------------------------------------------------

struct LogisticOptions {
  double tolerance = 1e-9;       // max coefficient change per outer step
  long max_sweeps = 100000;      // total inner coordinate sweeps
  double kkt_tol = 1e-6;
  double norm_cap = 1e6;
  /// Called with the objective after every outer step (diagnostics and tests).
  std::function<void(double)> on_sweep;
};

/// Smallest lambda at which b = 0 satisfies the optimality conditions, given
/// the intercept-only fit. Label-constant data clamp the fitted rate to
/// [1e-12, 1 - 1e-12].
double lambda_max_logistic(const Dataset& data);

/// Minimizes sum_i log(1 + e^{s_i}) - 1{y_i = 1} s_i + lambda ||b||_1 with
/// s_i = a + x_i^T b. Each outer step approximately minimizes the penalized
/// second-order model (weights p_i (1 - p_i)) by coordinate descent, then
/// backtracks on the true objective, so the objective never increases. A point
/// is returned only once its KKT residual is within kkt_tol. Throws ConvergenceError
/// when the sweep limit is hit without certifying KKT, NumericalError for
/// separable data at lambda = 0.
PathPoint fit_l1_logistic(const Dataset& data, double lambda, const PathPoint* warm_start = nullptr,
                          const LogisticOptions& options = {});

/// KKT residual of (a, b) for the penalized logistic problem.
double logistic_kkt_residual(const Dataset& data, double lambda, double intercept, const VectorXd& b);
double logistic_objective(const Dataset& data, double lambda, double intercept, const VectorXd& b);

// ---------------------------------------------------------------------------
// Hinge: linear program via bounded revised simplex
// ---------------------------------------------------------------------------

struct SvmOptions {
  long max_iterations = 1'000'000;
  double kkt_tol = 1e-7;
};

/// Lambda above which b = 0 is optimal: max_j |sum_i pi_i y_i x_ij| for the
/// multipliers pi of the intercept-only fit (pi = 1 on the minority class and
/// the balancing rate on the majority class).
double lambda_max_svm(const Dataset& data);

/// Minimizes sum_i max(0, 1 - y_i (a + x_i^T b)) + lambda ||b||_1, lambda > 0.
///
/// Solved through its LP dual, max sum_i pi_i subject to sum_i pi_i y_i = 0,
/// |sum_i pi_i y_i x_ij| <= lambda, 0 <= pi <= 1, with p + 1 equality rows and
/// bounded columns. (a, b) are the simplex multipliers; b_j is stored as an
/// exact zero whenever the range slack of row j is basic.
PathPoint fit_l1_svm(const Dataset& data, double lambda, const SvmOptions& options = {});

double svm_objective(const Dataset& data, double lambda, double intercept, const VectorXd& b);

/// Residual of the hinge subgradient conditions for (a, b) with multipliers pi.
double svm_kkt_residual(const Dataset& data, double lambda, double intercept, const VectorXd& b,
                        const VectorXd& pi);

// ---------------------------------------------------------------------------
// Paths and sign recovery
// ---------------------------------------------------------------------------

struct PathOptions {
  PathGrid grid;
  LogisticOptions logistic;
  SvmOptions svm;
};

/// Geometric grid lambda_k = lambda_max * ratio^{k / (K - 1)}, k = 0..K-1.
std::vector<double> lambda_grid(double lambda_max, const PathGrid& grid);

/// Logistic fits are warm-started from the previous grid point; hinge fits are
/// re-solved at each lambda. Solver errors are rethrown with the failing lambda.
RegularizationPath regularization_path(Loss loss, const Dataset& data, const PathOptions& options = {});

CsvTable path_to_csv(const RegularizationPath& path);

struct SignSearch {
  bool found = false;
  std::optional<double> lambda;  // largest lambda with the target signs
};

/// Looks for a point whose coefficient signs (entries with |b_j| <= zero_tol
/// count as 0) equal target_signs.
SignSearch path_contains_sign_correct(const RegularizationPath& path, const VectorXd& target_signs,
                                      double zero_tol = 1e-8);

// ---------------------------------------------------------------------------
// Limiting distribution of sqrt(n) (theta_hat - theta)
// ---------------------------------------------------------------------------

struct LimitProblem {
  BorderedMoment H;
  BorderedMoment J;
  double lambda_scaled = 0.0;
  ActivePartition partition;
};

struct LimitOptions {
  double tolerance = 1e-13;
  long max_sweeps = 100000;
  double kkt_tol = 1e-8;
};

/// argmin_u 1/2 u^T H u + w^T u + lambda_s G(u), where
/// G(u) = sum_{j in A} sign(beta_j) u_j + sum_{j in A^c} |u_j| and the
/// intercept coordinate 0 is unpenalized. Coordinate descent with exact
/// per-coordinate minimizers.
VectorXd limit_minimizer(const LimitProblem& problem, const VectorXd& w, const LimitOptions& options = {});

/// count x (p+1) matrix of minimizers for w ~ N(0, J).
MatrixXd sample_limit_distribution(const LimitProblem& problem, Eigen::Index count, Rng& rng,
                                   const LimitOptions& options = {});

/// Symmetric square-root factor F with F F^T = J (Cholesky, falling back to
/// an eigen-decomposition with clamped eigenvalues for singular J).
MatrixXd psd_factor(const MatrixXd& J);

}  // namespace l1gi
