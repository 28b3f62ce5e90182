#include "l1gi/gauss_moments.hpp"

#include "l1gi/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace l1gi {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

struct Direction {
  VectorXd nu;   // beta / ||beta||
  double norm;   // ||beta||
};

Direction direction_of(const Theta& theta) {
  const double norm = theta.beta.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw NumericalError("degenerate margin: beta must be nonzero and finite");
  return {theta.beta / norm, norm};
}

}  // namespace

BorderedMoment bordered(double scalar, const VectorXd& v, const MatrixXd& block) {
  const auto p = v.size();
  BorderedMoment out(p + 1, p + 1);
  out(0, 0) = scalar;
  out.block(1, 0, p, 1) = v;
  out.block(0, 1, 1, p) = v.transpose();
  out.bottomRightCorner(p, p) = block;
  return out;
}

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

MarginLaw margin_law(const PredictorDistribution& dist, const Theta& theta) {
  if (theta.beta.size() != dist.dim()) throw DomainError("margin_law: dimension mismatch");
  if (theta.beta.isZero(0.0)) throw NumericalError("degenerate margin: beta = 0");
  MarginLaw law;
  for (const auto& c : dist.components()) {
    const double var = theta.beta.dot(c.cov * theta.beta);
    if (!(var > 0.0)) throw NumericalError("degenerate margin: zero variance");
    law.components.push_back({c.weight, theta.alpha + theta.beta.dot(c.mean), var});
  }
  return law;
}

double margin_density(const MarginLaw& law, double m) {
  double f = 0.0;
  for (const auto& c : law.components) {
    const double sd = std::sqrt(c.variance);
    f += c.weight * normal_pdf((m - c.mean) / sd) / sd;
  }
  return f;
}

VectorXd component_posteriors(const PredictorDistribution& dist, const Theta& theta, double m) {
  const MarginLaw law = margin_law(dist, theta);
  const auto k = static_cast<Eigen::Index>(law.components.size());
  VectorXd logw(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = law.components[static_cast<std::size_t>(i)];
    const double z = m - c.mean;
    logw(i) = std::log(c.weight) - 0.5 * std::log(c.variance) - 0.5 * z * z / c.variance;
  }
  const double top = logw.maxCoeff();
  VectorXd w = (logw.array() - top).exp();
  return w / w.sum();
}

MixturePosterior mixture_posterior(const PredictorDistribution& dist, const Theta& theta, double m) {
  if (dist.kind() != DistKind::SymmetricMixture)
    throw ConfigError("mixture_posterior: distribution is not a symmetric mixture");
  const VectorXd w = component_posteriors(dist, theta, m);
  return {w(0), w(1)};
}

VectorXd conditional_mean(const VectorXd& mean, const MatrixXd& cov, const Theta& theta, double m) {
  const Direction dir = direction_of(theta);
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("conditional_mean: covariance is singular");
  const VectorXd cov_nu = cov * dir.nu;
  const double s = dir.nu.dot(cov_nu);
  const double d = (m - theta.alpha - mean.dot(theta.beta)) / dir.norm;
  return mean + (d / s) * cov_nu;
}

BorderedMoment component_conditional_moment(const GaussianComponent& comp, const Theta& theta, double m) {
  const Direction dir = direction_of(theta);
  const VectorXd& mu = comp.mean;
  const MatrixXd& cov = comp.cov;
  const VectorXd cov_nu = cov * dir.nu;
  const double s = dir.nu.dot(cov_nu);
  // Deviation of nu^T X from nu^T mu implied by M = m.
  const double d = (m - theta.alpha - mu.dot(theta.beta)) / dir.norm;

  const VectorXd first = mu + (d / s) * cov_nu;
  // (mu mu^T + cov) + (cov nu mu^T + mu nu^T cov) d / s + cov nu nu^T cov (d^2 - s) / s^2
  MatrixXd second = mu * mu.transpose() + cov;
  second.noalias() += (d / s) * (cov_nu * mu.transpose() + mu * cov_nu.transpose());
  second.noalias() += ((d * d - s) / (s * s)) * (cov_nu * cov_nu.transpose());
  return bordered(1.0, first, second);
}

BorderedMoment conditional_second_moment(const PredictorDistribution& dist, const Theta& theta, double m) {
  const auto& comps = dist.components();
  if (comps.size() == 1) return component_conditional_moment(comps.front(), theta, m);
  const VectorXd post = component_posteriors(dist, theta, m);
  BorderedMoment out = BorderedMoment::Zero(dist.dim() + 1, dist.dim() + 1);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double w = post(static_cast<Eigen::Index>(k));
    if (w > 0.0) out += w * component_conditional_moment(comps[k], theta, m);
  }
  return out;
}

BorderedMoment conditional_moment_density(const PredictorDistribution& dist, const Theta& theta, double m) {
  const MarginLaw law = margin_law(dist, theta);
  BorderedMoment out = BorderedMoment::Zero(dist.dim() + 1, dist.dim() + 1);
  const auto& comps = dist.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = law.components[k];
    const double sd = std::sqrt(c.variance);
    const double dens = c.weight * normal_pdf((m - c.mean) / sd) / sd;
    if (dens > 0.0) out += dens * component_conditional_moment(comps[k], theta, m);
  }
  return out;
}

BorderedMoment unconditional_second_moment(const PredictorDistribution& dist) {
  const auto p = dist.dim();
  VectorXd first = VectorXd::Zero(p);
  MatrixXd second = MatrixXd::Zero(p, p);
  for (const auto& c : dist.components()) {
    first += c.weight * c.mean;
    second += c.weight * (c.mean * c.mean.transpose() + c.cov);
  }
  return bordered(1.0, first, second);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;

  std::vector<double> nodes(static_cast<std::size_t>(order)), weights(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(order, std::make_pair(nodes, weights)).first->second;
}

namespace {

constexpr int kPanelOrder = 20;

// Integrates f over [lo, hi] split at breakpoints, using `panels` equal panels
// (distributed over the sub-intervals by length) of kPanelOrder nodes each.
template <typename Value, typename F>
Value composite_gl(F&& f, double lo, double hi, std::span<const double> breakpoints, int panels, Value zero) {
  const auto& [x, w] = gauss_legendre(kPanelOrder);
  std::vector<double> cuts{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());

  Value total = zero;
  const double length = hi - lo;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const int n = std::max(1, static_cast<int>(std::ceil(panels * (b - a) / length)));
    const double h = (b - a) / n;
    for (int k = 0; k < n; ++k) {
      const double left = a + k * h;
      const double half = 0.5 * h, mid = left + half;
      for (int i = 0; i < kPanelOrder; ++i)
        total += (half * w[static_cast<std::size_t>(i)]) * f(mid + half * x[static_cast<std::size_t>(i)]);
    }
  }
  return total;
}

double max_abs_diff(double a, double b) { return std::abs(a - b); }
double max_abs_diff(const MatrixXd& a, const MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }
double max_abs(double a) { return std::abs(a); }
double max_abs(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

template <typename Value, typename PerComponent>
Value refine(const MarginLaw& law, PerComponent&& integrand, std::span<const double> breakpoints,
             const QuadratureOptions& opt, Value zero) {
  int panels = std::max(1, opt.initial_nodes / kPanelOrder);
  auto evaluate = [&](int np) {
    Value total = zero;
    for (std::size_t k = 0; k < law.components.size(); ++k) {
      const auto& c = law.components[k];
      const double sd = std::sqrt(c.variance);
      const double lo = c.mean - opt.half_width_sd * sd, hi = c.mean + opt.half_width_sd * sd;
      total += composite_gl([&](double m) { return integrand(k, m); }, lo, hi, breakpoints, np, zero);
    }
    return total;
  };
  Value prev = evaluate(panels);
  for (int r = 0; r < opt.max_refinements; ++r) {
    panels *= 2;
    Value next = evaluate(panels);
    if (max_abs_diff(next, prev) < opt.tolerance * std::max(1.0, max_abs(next))) return next;
    prev = std::move(next);
  }
  throw NumericalError("margin quadrature did not converge");
}

}  // namespace

BorderedMoment integrate_margin(const PredictorDistribution& dist, const Theta& theta, const MarginWeight& weight,
                                std::span<const double> breakpoints, const QuadratureOptions& options) {
  const MarginLaw law = margin_law(dist, theta);
  const auto& comps = dist.components();
  const auto dim = dist.dim() + 1;
  auto integrand = [&](std::size_t k, double m) -> MatrixXd {
    const auto& c = law.components[k];
    const double sd = std::sqrt(c.variance);
    const double scale = c.weight * normal_pdf((m - c.mean) / sd) / sd * weight(m);
    if (scale == 0.0) return MatrixXd::Zero(dim, dim);
    return scale * component_conditional_moment(comps[k], theta, m);
  };
  return refine<MatrixXd>(law, integrand, breakpoints, options, MatrixXd::Zero(dim, dim));
}

double integrate_margin_scalar(const MarginLaw& law, const MarginWeight& weight,
                               std::span<const double> breakpoints, const QuadratureOptions& options) {
  auto integrand = [&](std::size_t k, double m) {
    const auto& c = law.components[k];
    const double sd = std::sqrt(c.variance);
    return c.weight * normal_pdf((m - c.mean) / sd) / sd * weight(m);
  };
  return refine<double>(law, integrand, breakpoints, options, 0.0);
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

MatrixXd sample_predictors(const PredictorDistribution& dist, Eigen::Index n, Rng& rng) {
  if (n < 0) throw DomainError("sample_predictors: negative sample size");
  const auto p = dist.dim();
  MatrixXd X(n, p);
  VectorXd z(p);
  const MatrixXd& L = dist.cov_factor();
  const bool mixture = dist.kind() == DistKind::SymmetricMixture;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    VectorXd x = L.triangularView<Eigen::Lower>() * z;
    if (mixture)
      x += rng.bernoulli(0.5) ? dist.center() : VectorXd(-dist.center());
    else
      x += dist.center();
    X.row(i) = x.transpose();
  }
  return X;
}

VectorXd sample_labels(const Design& design, const MatrixXd& X, Rng& rng) {
  if (X.cols() != design.p) throw DomainError("sample_labels: dimension mismatch");
  VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    y(i) = rng.bernoulli(design.response_probability(X.row(i).transpose())) ? 1.0 : -1.0;
  return y;
}

}  // namespace l1gi
