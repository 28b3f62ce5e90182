#include "l1gi/risk_engine.hpp"

#include "l1gi/error.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace l1gi {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^s) without overflow.
double log1pexp(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

}  // namespace

double loss_eval(Loss loss, double y, double s) {
  if (y != 1.0 && y != -1.0) throw DomainError("loss_eval: response must be -1 or +1");
  if (loss == Loss::Logistic) return (y == 1.0 ? -s : 0.0) + log1pexp(s);
  return std::max(0.0, 1.0 - y * s);
}

double loss_derivative(Loss loss, double y, double s) {
  if (loss == Loss::Logistic) return sigmoid(s) - (y == 1.0 ? 1.0 : 0.0);
  return y * s < 1.0 ? -y : 0.0;
}

double response_given_margin(const Design& design, const Theta& theta, double m) {
  const double c = theta.beta.dot(design.nu);
  if (c == 0.0 || (theta.beta - c * design.nu).norm() > 1e-9 * theta.beta.norm())
    throw ConfigError("response law needs beta to be a nonzero multiple of nu");
  return profile_eval(design.profile, design.intercept_zeta + (m - theta.alpha) / c);
}

// ---------------------------------------------------------------------------
// c* search
// ---------------------------------------------------------------------------

double projected_risk(const Design& design, Loss loss, std::span<const double> z, double c) {
  if (z.empty()) return 0.0;
  double total = 0.0;
  for (double zi : z) {
    const double g = profile_eval(design.profile, design.intercept_zeta + zi);
    total += g * loss_eval(loss, 1.0, c * zi) + (1.0 - g) * loss_eval(loss, -1.0, c * zi);
  }
  return total / static_cast<double>(z.size());
}

Theta fit_cstar(const Design& design, Loss loss, std::int64_t mc_size, Rng& rng, const CstarOptions& options) {
  validate(design);
  if (mc_size < 10000) throw ConfigError("fit_cstar: mc_size must be at least 1e4");

  // Exact law of X^T nu; sampling it directly is equivalent to projecting
  // full predictor draws.
  Theta unit{0.0, design.nu, loss, 1.0};
  const MarginLaw law = margin_law(design.dist, unit);
  std::vector<double> z(static_cast<std::size_t>(mc_size));
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto& comp = law.components.size() == 1 || rng.bernoulli(0.5) ? law.components[0] : law.components[1];
    z[i] = comp.mean + std::sqrt(comp.variance) * rng.normal();
    g[i] = profile_eval(design.profile, design.intercept_zeta + z[i]);
  }

  auto risk = [&](double c) {
    double total = 0.0;
    if (loss == Loss::Logistic) {
      for (std::size_t i = 0; i < z.size(); ++i) total += log1pexp(c * z[i]) - g[i] * c * z[i];
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = c * z[i];
        total += g[i] * std::max(0.0, 1.0 - s) + (1.0 - g[i]) * std::max(0.0, 1.0 + s);
      }
    }
    return total / static_cast<double>(z.size());
  };

  double hi = options.initial_upper;
  double f_hi = risk(hi);
  int doublings = 0;
  for (;;) {
    const double f_next = risk(2.0 * hi);
    hi *= 2.0;
    if (f_next > f_hi) break;
    f_hi = f_next;
    if (++doublings > options.max_doublings)
      throw NumericalError("fit_cstar: risk appears unbounded below along nu (no bracket found)");
  }

  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0, b = hi;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  double f1 = risk(x1), f2 = risk(x2);
  while (b - a > options.tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = risk(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = risk(x2);
    }
  }
  const double cstar = 0.5 * (a + b);
  return Theta{0.0, cstar * design.nu, loss, cstar};
}

// ---------------------------------------------------------------------------
// Hessians and score covariances
// ---------------------------------------------------------------------------

BorderedMoment hessian_logistic(const Design& design, const Theta& theta, const QuadratureOptions& options) {
  if (!theta.beta.allFinite() || !std::isfinite(theta.alpha)) throw DomainError("hessian_logistic: non-finite theta");
  if (theta.beta.isZero(0.0)) {
    const double s = sigmoid(theta.alpha);
    return unconditional_second_moment(design.dist) * (s * (1.0 - s));
  }
  auto weight = [](double m) {
    const double s = sigmoid(m);
    return s * (1.0 - s);
  };
  return integrate_margin(design.dist, theta, weight, {}, options);
}

namespace {

struct Kappa {
  double k0 = 0.0, k1 = 0.0, k2 = 0.0;
};

BorderedMoment assemble_kappa(const PredictorDistribution& dist, const Theta& theta, const std::vector<Kappa>& kappas) {
  const VectorXd nu = theta.beta.normalized();
  const auto p = dist.dim();
  double h00 = 0.0;
  VectorXd h0b = VectorXd::Zero(p);
  MatrixXd hbb = MatrixXd::Zero(p, p);
  const auto& comps = dist.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = comps[k];
    const auto& kap = kappas[k];
    const VectorXd cov_nu = c.cov * nu;
    const double s = nu.dot(cov_nu);
    h00 += kap.k0;
    h0b += kap.k0 * c.mean + (kap.k1 / s) * cov_nu;
    hbb += kap.k0 * (c.mean * c.mean.transpose() + c.cov) +
           (kap.k1 / s) * (cov_nu * c.mean.transpose() + c.mean * cov_nu.transpose()) +
           (kap.k2 / s) * (cov_nu * cov_nu.transpose());
  }
  return bordered(h00, h0b, hbb);
}

// Per-component standardized deviation d_k(m) and s_k.
std::pair<double, double> deviation(const GaussianComponent& c, const Theta& theta, double m) {
  const double norm = theta.beta.norm();
  const VectorXd nu = theta.beta / norm;
  const double s = nu.dot(c.cov * nu);
  return {(m - theta.alpha - c.mean.dot(theta.beta)) / norm, s};
}

}  // namespace

BorderedMoment hessian_logistic_kappa(const Design& design, const Theta& theta, const QuadratureOptions& options) {
  const auto& comps = design.dist.components();
  const MarginLaw law = margin_law(design.dist, theta);
  std::vector<Kappa> kappas;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    // One-component law so that each kappa integral uses pi_k phi_k(m) dm.
    MarginLaw single{{law.components[k]}};
    auto base = [](double m) {
      const double s = sigmoid(m);
      return s * (1.0 - s);
    };
    Kappa kap;
    kap.k0 = integrate_margin_scalar(single, base, {}, options);
    kap.k1 = integrate_margin_scalar(single, [&](double m) { return deviation(comps[k], theta, m).first * base(m); },
                                     {}, options);
    kap.k2 = integrate_margin_scalar(single,
                                     [&](double m) {
                                       const auto [d, s] = deviation(comps[k], theta, m);
                                       return (d * d / s - 1.0) * base(m);
                                     },
                                     {}, options);
    kappas.push_back(kap);
  }
  return assemble_kappa(design.dist, theta, kappas);
}

BorderedMoment hessian_svm(const Design& design, const Theta& theta) {
  if (theta.beta.isZero(0.0)) throw NumericalError("hessian_svm: requires beta != 0");
  const MarginLaw law = margin_law(design.dist, theta);
  const double w_plus = response_given_margin(design, theta, 1.0) * margin_density(law, 1.0);
  const double w_minus = (1.0 - response_given_margin(design, theta, -1.0)) * margin_density(law, -1.0);
  return conditional_second_moment(design.dist, theta, 1.0) * w_plus +
         conditional_second_moment(design.dist, theta, -1.0) * w_minus;
}

BorderedMoment hessian_svm_kappa(const Design& design, const Theta& theta) {
  if (theta.beta.isZero(0.0)) throw NumericalError("hessian_svm_kappa: requires beta != 0");
  const auto& comps = design.dist.components();
  const MarginLaw law = margin_law(design.dist, theta);
  const std::array<double, 2> elbows{1.0, -1.0};
  const std::array<double, 2> class_prob{response_given_margin(design, theta, 1.0),
                                         1.0 - response_given_margin(design, theta, -1.0)};
  std::vector<Kappa> kappas(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = law.components[k];
    const double sd = std::sqrt(c.variance);
    for (std::size_t e = 0; e < 2; ++e) {
      const double m = elbows[e];
      const double dens = c.weight * normal_pdf((m - c.mean) / sd) / sd * class_prob[e];
      const auto [d, s] = deviation(comps[k], theta, m);
      kappas[k].k0 += dens;
      kappas[k].k1 += d * dens;
      kappas[k].k2 += (d * d / s - 1.0) * dens;
    }
  }
  return assemble_kappa(design.dist, theta, kappas);
}

BorderedMoment score_cov_logistic(const Design& design, const Theta& theta, const QuadratureOptions& options) {
  auto weight = [&](double m) {
    const double g = response_given_margin(design, theta, m);
    const double s = sigmoid(m);
    return g - 2.0 * g * s + s * s;
  };
  return integrate_margin(design.dist, theta, weight, {}, options);
}

BorderedMoment score_cov_hinge(const Design& design, const Theta& theta, const QuadratureOptions& options) {
  if (theta.beta.isZero(0.0)) throw NumericalError("score_cov_hinge: requires beta != 0");
  auto weight = [&](double m) {
    const double g = response_given_margin(design, theta, m);
    return (m <= 1.0 ? g : 0.0) + (m >= -1.0 ? 1.0 - g : 0.0);
  };
  const std::array<double, 2> breaks{-1.0, 1.0};
  return integrate_margin(design.dist, theta, weight, breaks, options);
}

BorderedMoment risk_hessian(const Design& design, const Theta& theta) {
  return theta.loss == Loss::Logistic ? hessian_logistic(design, theta) : hessian_svm(design, theta);
}

BorderedMoment score_covariance(const Design& design, const Theta& theta) {
  return theta.loss == Loss::Logistic ? score_cov_logistic(design, theta) : score_cov_hinge(design, theta);
}

double empirical_risk(Loss loss, const MatrixXd& X, const VectorXd& y, double a, const VectorXd& b) {
  if (X.rows() != y.size() || X.cols() != b.size()) throw DomainError("empirical_risk: shape mismatch");
  if (X.rows() == 0) return 0.0;
  const VectorXd s = (X * b).array() + a;
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += loss_eval(loss, y(i), s(i));
  return total / static_cast<double>(X.rows());
}

RiskCurvature risk_curvature(const Design& design, const Theta& theta) {
  return {risk_hessian(design, theta), score_covariance(design, theta), theta, CurvatureMethod::Quadrature};
}

nlohmann::json to_json(const RiskCurvature& rc) {
  return {{"theta", to_json(rc.theta)},
          {"dim", rc.hessian.rows()},
          {"hessian", matrix_to_json(rc.hessian)},
          {"score_cov", matrix_to_json(rc.score_cov)},
          {"method", rc.method == CurvatureMethod::Quadrature ? "quadrature" : "monte_carlo"}};
}

RiskCurvature curvature_from_json(const nlohmann::json& doc) {
  try {
    RiskCurvature rc;
    rc.theta = theta_from_json(doc.at("theta"));
    const auto dim = doc.at("dim").get<Eigen::Index>();
    rc.hessian = matrix_from_json(doc.at("hessian"), dim, dim);
    rc.score_cov = matrix_from_json(doc.at("score_cov"), dim, dim);
    rc.method = doc.at("method").get<std::string>() == "quadrature" ? CurvatureMethod::Quadrature
                                                                    : CurvatureMethod::MonteCarlo;
    return rc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("curvature json: ") + e.what());
  }
}

}  // namespace l1gi
