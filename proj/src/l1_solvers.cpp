#include "l1gi/l1_solvers.hpp"

#include "l1gi/error.hpp"
#include "l1gi/risk_engine.hpp"
#include "l1gi/simplex.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace l1gi {

namespace {

void check_data(const Dataset& d) {
  if (d.X.rows() != d.y.size()) throw DomainError("dataset: X and y have different lengths");
  for (Eigen::Index i = 0; i < d.y.size(); ++i)
    if (d.y(i) != 1.0 && d.y(i) != -1.0) throw DomainError("dataset: labels must be -1 or +1");
  if (!d.X.allFinite()) throw DomainError("dataset: non-finite predictor");
}

std::string with_lambda(const std::string& what, double lambda) {
  if (what.find("lambda=") != std::string::npos) return what;
  char buf[64];
  std::snprintf(buf, sizeof buf, " at lambda=%.17g", lambda);
  return what + buf;
}

double log1pexp(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

}  // namespace

std::string fingerprint(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const void* ptr, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t dims[2] = {data.X.rows(), data.X.cols()};
  feed(dims, sizeof dims);
  feed(data.X.data(), static_cast<std::size_t>(data.X.size()) * sizeof(double));
  feed(data.y.data(), static_cast<std::size_t>(data.y.size()) * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

double lambda_max_logistic(const Dataset& data) {
  check_data(data);
  if (data.n() < 1) throw DomainError("lambda_max_logistic: need at least one observation");
  const VectorXd y01 = (data.y.array() + 1.0) * 0.5;
  const double rate = std::clamp(y01.mean(), 1e-12, 1.0 - 1e-12);
  if (data.p() == 0) return 0.0;
  return (data.X.transpose() * (y01.array() - rate).matrix()).cwiseAbs().maxCoeff();
}

double logistic_objective(const Dataset& data, double lambda, double intercept, const VectorXd& b) {
  const VectorXd s = (data.X * b).array() + intercept;
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += log1pexp(s(i)) - (data.y(i) > 0 ? s(i) : 0.0);
  return total + lambda * b.lpNorm<1>();
}

double logistic_kkt_residual(const Dataset& data, double lambda, double intercept, const VectorXd& b) {
  const VectorXd s = (data.X * b).array() + intercept;
  VectorXd r(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) r(i) = sigmoid(s(i)) - (data.y(i) > 0 ? 1.0 : 0.0);
  double worst = std::abs(r.sum());
  const VectorXd g = data.X.transpose() * r;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double v = b(j) != 0.0 ? std::abs(g(j) + lambda * (b(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

PathPoint fit_l1_logistic(const Dataset& data, double lambda, const PathPoint* warm, const LogisticOptions& opt) {
  check_data(data);
  if (!(lambda >= 0.0)) throw DomainError("fit_l1_logistic: lambda must be nonnegative");
  const Eigen::Index n = data.n(), p = data.p(), dim = p + 1;
  if (n < 1) throw DomainError("fit_l1_logistic: need at least one observation");

  const VectorXd y01 = (data.y.array() + 1.0) * 0.5;
  VectorXd theta(dim);  // (a, b)
  if (warm && warm->coefficients.size() == p) {
    theta << warm->intercept, warm->coefficients;
  } else {
    const double rate = std::clamp(y01.mean(), 1e-12, 1.0 - 1e-12);
    theta.setZero();
    theta(0) = std::log(rate / (1.0 - rate));
  }
  MatrixXd Xt(n, dim);  // design with the intercept column
  Xt.col(0).setOnes();
  Xt.rightCols(p) = data.X;

  auto penalty = [&](const VectorXd& t) { return lambda * t.tail(p).lpNorm<1>(); };
  auto smooth = [&](const VectorXd& eta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += log1pexp(eta(i)) - y01(i) * eta(i);
    return total;
  };

  VectorXd eta = Xt * theta;
  double f = smooth(eta) + penalty(theta);
  auto certified = [&](double residual) {
    PathPoint out;
    out.lambda = lambda;
    out.intercept = theta(0);
    out.coefficients = theta.tail(p);
    out.kkt_residual = residual;
    out.objective = logistic_objective(data, lambda, out.intercept, out.coefficients);
    return out;
  };
  VectorXd prob(n), w(n), z(dim), hd(dim), grad(dim), d(dim), eta_trial(n);
  MatrixXd G(dim, dim);
  long sweeps = 0;

  for (int outer = 0; outer < 10000; ++outer) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      w(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    grad.noalias() = Xt.transpose() * (prob - y01);
    G.noalias() = Xt.transpose() * w.asDiagonal() * Xt;

    // Inner cyclic coordinate descent on the penalized quadratic model,
    // with hd = G (z - theta) kept up to date.
    // The inner solve is inexact: it stops once sweeps move much less than the
    // first one did (rounding in hd keeps absolute changes from reaching 0 on
    // ill-conditioned G), and the line search below still guarantees descent.
    z = theta;
    hd.setZero();
    double inner_tol = 1e-3 * opt.tolerance;
    for (int inner = 0; inner < 1000; ++inner, ++sweeps) {
      if (sweeps >= opt.max_sweeps) break;
      double change = 0.0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double gkk = G(k, k);
        if (!(gkk > 0.0)) continue;
        const double c = grad(k) + hd(k) - gkk * z(k);
        const double next = k == 0 ? -c / gkk : soft_threshold(-c, lambda) / gkk;
        const double step = next - z(k);
        if (step != 0.0) {
          z(k) = next;
          hd.noalias() += step * G.col(k);
          change = std::max(change, std::abs(step));
        }
      }
      if (inner == 0) inner_tol = std::max(inner_tol, 1e-6 * change);
      if (change <= inner_tol) break;
    }

    // Backtracking on the true objective keeps it monotone.
    d = z - theta;
    // Penalty change summed per coordinate: differencing two large norms
    // would bury a tiny model decrease in rounding.
    double pen_change = 0.0;
    for (Eigen::Index k = 1; k < dim; ++k) pen_change += std::abs(z(k)) - std::abs(theta(k));
    const double decrease = grad.dot(d) + lambda * pen_change;
    double t = 1.0, f_new = f;
    bool accepted = false;
    if (std::abs(decrease) <= 1e-11 * (1.0 + std::abs(f)) && d.lpNorm<Eigen::Infinity>() > 0.0) {
      // Below the resolution of f: near the optimum, take the full step.
      eta_trial.noalias() = eta + Xt * d;
      f_new = smooth(eta_trial) + penalty(z);
      accepted = true;
    }
    for (int ls = 0; ls < 60 && decrease < 0.0 && !accepted; ++ls, t *= 0.5) {
      eta_trial.noalias() = eta + t * (Xt * d);
      f_new = smooth(eta_trial) + penalty(theta + t * d);
      if (f_new <= f + 1e-4 * t * decrease) {
        accepted = true;
        break;
      }
    }
    double max_change = 0.0;
    const double f_old = f;
    if (accepted) {
      theta += t * d;
      eta = eta_trial;
      f = f_new;
      max_change = t * d.lpNorm<Eigen::Infinity>();
    }
    // Nearly flat directions (large coefficients on almost separable data)
    // can keep moving long after f stops changing.
    const bool stalled = f_old - f <= 1e-15 * (1.0 + std::abs(f));
    if (opt.on_sweep) opt.on_sweep(f);

    if (!theta.allFinite() || theta.lpNorm<Eigen::Infinity>() > opt.norm_cap)
      throw NumericalError(with_lambda("fit_l1_logistic: coefficient norm diverged (separable data?)", lambda));
    if (lambda == 0.0 && (data.y.array() * eta.array() > 0.0).all())
      throw NumericalError("fit_l1_logistic: data are linearly separable, unpenalized MLE does not exist");

    if (max_change < opt.tolerance || stalled) {
      const double residual = logistic_kkt_residual(data, lambda, theta(0), theta.tail(p));
      if (residual <= opt.kkt_tol) return certified(residual);
      if (!accepted) break;  // no descent left but KKT not met
    }
    if (sweeps >= opt.max_sweeps) break;
  }
  const double residual = logistic_kkt_residual(data, lambda, theta(0), theta.tail(p));
  if (residual <= opt.kkt_tol) return certified(residual);
  throw ConvergenceError(with_lambda("fit_l1_logistic: no KKT certificate within the sweep limit", lambda), residual);
}

// ---------------------------------------------------------------------------
// Hinge
// ---------------------------------------------------------------------------

double lambda_max_svm(const Dataset& data) {
  check_data(data);
  const Eigen::Index n = data.n();
  const double n_pos = (data.y.array() > 0).count();
  const double n_neg = static_cast<double>(n) - n_pos;
  VectorXd pi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (n_pos == n_neg)
      pi(i) = 1.0;
    else if (n_pos > n_neg)
      pi(i) = data.y(i) > 0 ? n_neg / n_pos : 1.0;
    else
      pi(i) = data.y(i) < 0 ? n_pos / n_neg : 1.0;
  }
  if (data.p() == 0) return 0.0;
  return (data.X.transpose() * (pi.array() * data.y.array()).matrix()).cwiseAbs().maxCoeff();
}

double svm_objective(const Dataset& data, double lambda, double intercept, const VectorXd& b) {
  const VectorXd s = (data.X * b).array() + intercept;
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += std::max(0.0, 1.0 - data.y(i) * s(i));
  return total + lambda * b.lpNorm<1>();
}

double svm_kkt_residual(const Dataset& data, double lambda, double intercept, const VectorXd& b,
                        const VectorXd& pi) {
  const VectorXd weighted = pi.array() * data.y.array();
  double worst = std::abs(weighted.sum());
  const VectorXd corr = data.X.transpose() * weighted;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double v = b(j) != 0.0 ? std::abs(corr(j) - lambda * (b(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(corr(j)) - lambda);
    worst = std::max(worst, v);
  }
  const VectorXd margin = data.y.array() * ((data.X * b).array() + intercept);
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    worst = std::max(worst, pi(i) * std::max(0.0, margin(i) - 1.0));
    worst = std::max(worst, (1.0 - pi(i)) * std::max(0.0, 1.0 - margin(i)));
    worst = std::max(worst, std::max(-pi(i), pi(i) - 1.0));
  }
  return worst;
}

PathPoint fit_l1_svm(const Dataset& data, double lambda, const SvmOptions& opt) {
  check_data(data);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("fit_l1_svm: lambda must be positive");
  const Eigen::Index n = data.n(), p = data.p(), m = p + 1;
  const Eigen::Index cols = n + p + 1;

  BoundedLp lp;
  lp.A = MatrixXd::Zero(m, cols);
  lp.b = VectorXd::Zero(m);
  lp.c = VectorXd::Zero(cols);
  lp.lower = VectorXd::Zero(cols);
  lp.upper = VectorXd::Zero(cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    lp.A(0, i) = data.y(i);
    lp.A.block(1, i, p, 1) = data.y(i) * data.X.row(i).transpose();
    lp.c(i) = -1.0;
    lp.upper(i) = 1.0;
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    lp.A(j + 1, n + j) = -1.0;
    lp.lower(n + j) = -lambda;
    lp.upper(n + j) = lambda;
  }
  lp.A(0, n + p) = 1.0;  // fixed artificial carrying the balance row

  std::vector<int> basis(static_cast<std::size_t>(m));
  basis[0] = static_cast<int>(n + p);
  for (Eigen::Index j = 0; j < p; ++j) basis[static_cast<std::size_t>(j + 1)] = static_cast<int>(n + j);

  SimplexOptions sopt;
  sopt.max_iterations = opt.max_iterations;
  const LpSolution sol = solve_bounded_lp(lp, basis, sopt);
  if (sol.status == LpStatus::IterationLimit)
    throw NumericalError(with_lambda("fit_l1_svm: simplex iteration limit reached", lambda));
  if (sol.status == LpStatus::Unbounded)
    throw NumericalError(with_lambda("fit_l1_svm: unbounded LP (lambda too small or degenerate data)", lambda));

  PathPoint out;
  out.lambda = lambda;
  out.intercept = -sol.duals(0);
  out.coefficients = VectorXd::Zero(p);
  const double scale = 1e-12 * (1.0 + sol.duals.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < p; ++j) {
    if (sol.is_basic[static_cast<std::size_t>(n + j)]) continue;
    const double v = -sol.duals(j + 1);
    out.coefficients(j) = std::abs(v) <= scale ? 0.0 : v;
  }
  const VectorXd pi = sol.x.head(n);
  out.objective = svm_objective(data, lambda, out.intercept, out.coefficients);
  out.kkt_residual = svm_kkt_residual(data, lambda, out.intercept, out.coefficients, pi);
  const double gap = out.objective - pi.sum();
  out.kkt_residual = std::max(out.kkt_residual, std::abs(gap) / (1.0 + std::abs(out.objective)));
  if (out.kkt_residual > opt.kkt_tol)
    throw ConvergenceError(with_lambda("fit_l1_svm: LP vertex failed the KKT certificate", lambda), out.kkt_residual);
  return out;
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

std::vector<double> lambda_grid(double lambda_max, const PathGrid& grid) {
  if (grid.count < 2) throw ConfigError("lambda grid: need at least two points");
  if (!(grid.ratio > 0.0 && grid.ratio <= 1.0)) throw ConfigError("lambda grid: ratio must be in (0, 1]");
  std::vector<double> out(static_cast<std::size_t>(grid.count));
  for (int k = 0; k < grid.count; ++k)
    out[static_cast<std::size_t>(k)] = lambda_max * std::pow(grid.ratio, static_cast<double>(k) / (grid.count - 1));
  return out;
}

RegularizationPath regularization_path(Loss loss, const Dataset& data, const PathOptions& options) {
  RegularizationPath path;
  path.data_id = fingerprint(data);
  double lmax = loss == Loss::Logistic ? lambda_max_logistic(data) : lambda_max_svm(data);
  if (loss == Loss::Hinge) lmax = std::max(lmax, 1e-12);
  const auto grid = lambda_grid(lmax, options.grid);
  const PathPoint* previous = nullptr;
  for (double lambda : grid) {
    try {
      if (loss == Loss::Logistic)
        path.points.push_back(fit_l1_logistic(data, lambda, previous, options.logistic));
      else
        path.points.push_back(fit_l1_svm(data, lambda, options.svm));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(e, with_lambda(std::string("path: ") + e.what(), lambda));
    } catch (const NumericalError& e) {
      throw NumericalError(with_lambda(std::string("path: ") + e.what(), lambda));
    }
    previous = &path.points.back();
  }
  return path;
}

CsvTable path_to_csv(const RegularizationPath& path) {
  CsvTable t;
  const auto p = path.points.empty() ? 0 : path.points.front().coefficients.size();
  t.header = {"lambda", "intercept"};
  for (Eigen::Index j = 0; j < p; ++j) t.header.push_back("b" + std::to_string(j + 1));
  t.header.push_back("kkt_residual");
  t.header.push_back("objective");
  for (const auto& pt : path.points) {
    std::vector<std::string> row{format_double(pt.lambda), format_double(pt.intercept)};
    for (Eigen::Index j = 0; j < p; ++j) row.push_back(format_double(pt.coefficients(j)));
    row.push_back(format_double(pt.kkt_residual));
    row.push_back(format_double(pt.objective));
    t.rows.push_back(std::move(row));
  }
  return t;
}

SignSearch path_contains_sign_correct(const RegularizationPath& path, const VectorXd& target, double zero_tol) {
  for (const auto& pt : path.points) {
    if (pt.coefficients.size() != target.size()) throw DomainError("sign search: dimension mismatch");
    bool match = true;
    for (Eigen::Index j = 0; j < target.size() && match; ++j) {
      const double v = pt.coefficients(j);
      const double s = std::abs(v) <= zero_tol ? 0.0 : (v > 0 ? 1.0 : -1.0);
      match = s == target(j);
    }
    if (match) return {true, pt.lambda};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Limit problem
// ---------------------------------------------------------------------------

VectorXd limit_minimizer(const LimitProblem& prob, const VectorXd& w, const LimitOptions& opt) {
  const auto dim = prob.H.rows();
  if (prob.H.cols() != dim || w.size() != dim || prob.partition.dim() != dim - 1)
    throw DomainError("limit_minimizer: dimension mismatch");
  if (!(prob.lambda_scaled >= 0.0)) throw DomainError("limit_minimizer: lambda must be nonnegative");

  // Per-coordinate role: 0 = unpenalized, +-1 = active with that sign, 2 = inactive.
  std::vector<double> role(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t k = 0; k < prob.partition.active.size(); ++k)
    role[static_cast<std::size_t>(prob.partition.active[k] + 1)] = prob.partition.sign_active(static_cast<Eigen::Index>(k));
  for (int j : prob.partition.inactive) role[static_cast<std::size_t>(j + 1)] = 2.0;

  const double lam = prob.lambda_scaled;
  VectorXd u = VectorXd::Zero(dim);
  VectorXd grad = w;  // H u + w
  auto kkt = [&]() {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double r = role[static_cast<std::size_t>(k)];
      double v;
      if (r == 2.0)
        v = u(k) != 0.0 ? std::abs(grad(k) + lam * (u(k) > 0 ? 1.0 : -1.0)) : std::max(0.0, std::abs(grad(k)) - lam);
      else
        v = std::abs(grad(k) + lam * r);
      worst = std::max(worst, v);
    }
    return worst;
  };

  const double scale = 1.0 + w.cwiseAbs().maxCoeff() + lam;
  for (long sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double hkk = prob.H(k, k);
      if (!(hkk > 0.0)) throw NumericalError("limit_minimizer: H must have a positive diagonal");
      const double rest = grad(k) - hkk * u(k);
      const double r = role[static_cast<std::size_t>(k)];
      const double next = r == 2.0 ? -soft_threshold(rest, lam) / hkk : -(rest + lam * r) / hkk;
      const double delta = next - u(k);
      if (delta != 0.0) {
        u(k) = next;
        grad.noalias() += delta * prob.H.col(k);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change <= opt.tolerance * (1.0 + u.cwiseAbs().maxCoeff())) {
      grad = prob.H * u + w;
      const double res = kkt();
      if (res <= opt.kkt_tol * scale) return u;
    }
  }
  grad = prob.H * u + w;
  throw ConvergenceError("limit_minimizer: sweep limit reached", kkt());
}

MatrixXd psd_factor(const MatrixXd& J) {
  Eigen::LLT<MatrixXd> llt(J);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (J + J.transpose()));
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

MatrixXd sample_limit_distribution(const LimitProblem& prob, Eigen::Index count, Rng& rng, const LimitOptions& opt) {
  const auto dim = prob.H.rows();
  const MatrixXd F = psd_factor(prob.J);
  MatrixXd draws(count, dim);
  VectorXd z(dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index k = 0; k < dim; ++k) z(k) = rng.normal();
    draws.row(r) = limit_minimizer(prob, F * z, opt).transpose();
  }
  return draws;
}

}  // namespace l1gi
