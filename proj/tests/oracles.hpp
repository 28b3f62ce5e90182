#pragma once
// Independent reference computations for the tests. Nothing here calls the
// library's quadrature or solvers.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double npdf(double z, double mean = 0.0, double var = 1.0) {
  const double d = z - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double logistic(double r) { return 1.0 / (1.0 + std::exp(-r)); }

// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12, int depth = 0) {
  const double c = 0.5 * (a + b), fa = f(a), fb = f(b), fc = f(c);
  const double whole = (b - a) / 6.0 * (fa + 4 * fc + fb);
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double s, double eps, int lvl) {
        const double mid = 0.5 * (lo + hi), l = 0.5 * (lo + mid), r = 0.5 * (mid + hi);
        const double fl = f(l), fr = f(r);
        const double left = (mid - lo) / 6.0 * (flo + 4 * fl + fmid), right = (hi - mid) / 6.0 * (fmid + 4 * fr + fhi);
        if (lvl > 40 || std::abs(left + right - s) <= 15 * eps) return left + right + (left + right - s) / 15.0;
        return rec(lo, mid, flo, fl, fmid, left, eps / 2, lvl + 1) + rec(mid, hi, fmid, fr, fhi, right, eps / 2, lvl + 1);
      };
  return rec(a, b, fa, fc, fb, whole, tol, depth);
}

// Integral over the real line split at the given points, truncated at +-L.
inline double integrate_line(const std::function<double(double)>& f, std::vector<double> cuts, double L = 40.0) {
  cuts.insert(cuts.begin(), -L);
  cuts.push_back(L);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    // unit-width panels so no panel can look flat at its sample points
    const int pieces = static_cast<int>(std::ceil(cuts[i + 1] - cuts[i]));
    const double h = (cuts[i + 1] - cuts[i]) / pieces;
    for (int k = 0; k < pieces; ++k) total += simpson(f, cuts[i] + k * h, cuts[i] + (k + 1) * h, 1e-14);
  }
  return total;
}

inline double hinge_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, double a,
                              const Eigen::VectorXd& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) total += std::max(0.0, 1.0 - y(i) * (a + X.row(i).dot(b)));
  return total + lambda * b.lpNorm<1>();
}

// Subgradient method with diminishing steps, tracking the best iterate.
inline double hinge_subgradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, int iterations) {
  const auto n = X.rows(), p = X.cols();
  double a = 0.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double best = hinge_objective(X, y, lambda, a, b);
  for (int k = 1; k <= iterations; ++k) {
    double ga = 0.0;
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (1.0 - y(i) * (a + X.row(i).dot(b)) > 0.0) {
        ga -= y(i);
        gb -= y(i) * X.row(i).transpose();
      }
    }
    for (Eigen::Index j = 0; j < p; ++j) gb(j) += lambda * ((b(j) > 0) - (b(j) < 0));
    const double norm = std::sqrt(ga * ga + gb.squaredNorm());
    if (norm == 0.0) break;
    const double step = 0.5 / std::sqrt(static_cast<double>(k)) / norm;
    a -= step * ga;
    b -= step * gb;
    best = std::min(best, hinge_objective(X, y, lambda, a, b));
  }
  return best;
}

}  // namespace oracle
