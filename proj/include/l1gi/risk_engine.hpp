#pragma once

#include "l1gi/core_model.hpp"
#include "l1gi/gauss_moments.hpp"
#include "l1gi/rng.hpp"

#include <json.hpp>

namespace l1gi {

/// Loss at response y in {-1, +1} and linear score s.
/// Logistic: -1{y = 1} s + log(1 + e^s). Hinge: max(0, 1 - y s).
double loss_eval(Loss loss, double y, double s);

/// First derivative of the loss in s (a subgradient for the hinge at the elbow).
double loss_derivative(Loss loss, double y, double s);

/// Logistic sigmoid e^s / (1 + e^s), overflow-safe.
double sigmoid(double s);

/// P(Y = 1 | M = m) for a theta parallel to nu: g(zeta + (m - alpha) / c*).
/// Throws ConfigError when beta is not a nonzero multiple of nu.
double response_given_margin(const Design& design, const Theta& theta, double m);

struct CstarOptions {
  double tolerance = 1e-6;     // final bracket width
  double initial_upper = 4.0;
  int max_doublings = 40;
};

/// Risk minimizer with alpha = 0 and beta = c* nu. c* minimizes the Monte Carlo
/// average over X of the Y-conditional risk, using mc_size draws of X^T nu from
/// its exact law. Golden-section search on a bracket grown by doubling.
Theta fit_cstar(const Design& design, Loss loss, std::int64_t mc_size, Rng& rng, const CstarOptions& options = {});

/// Average over z_i of g(z_i) L(+1, c z_i) + (1 - g(z_i)) L(-1, c z_i).
double projected_risk(const Design& design, Loss loss, std::span<const double> z, double c);

BorderedMoment hessian_logistic(const Design& design, const Theta& theta, const QuadratureOptions& options = {});

/// Same Hessian through the kappa-constant assembly, one set of three scalar
/// integrals per Gaussian component. Cross-check for hessian_logistic.
BorderedMoment hessian_logistic_kappa(const Design& design, const Theta& theta, const QuadratureOptions& options = {});

/// Two-point evaluation at the elbows M = 1 and M = -1.
BorderedMoment hessian_svm(const Design& design, const Theta& theta);

/// Elbow form through the kappa-constant assembly. Cross-check for hessian_svm.
BorderedMoment hessian_svm_kappa(const Design& design, const Theta& theta);

BorderedMoment score_cov_logistic(const Design& design, const Theta& theta, const QuadratureOptions& options = {});
BorderedMoment score_cov_hinge(const Design& design, const Theta& theta, const QuadratureOptions& options = {});

/// Dispatch on theta.loss.
BorderedMoment risk_hessian(const Design& design, const Theta& theta);
BorderedMoment score_covariance(const Design& design, const Theta& theta);

/// (1/n) sum_i L(y_i, a + x_i^T b); 0 for empty data.
double empirical_risk(Loss loss, const MatrixXd& X, const VectorXd& y, double a, const VectorXd& b);

enum class CurvatureMethod { Quadrature, MonteCarlo };

struct RiskCurvature {
  BorderedMoment hessian;
  BorderedMoment score_cov;
  Theta theta;
  CurvatureMethod method = CurvatureMethod::Quadrature;
};

RiskCurvature risk_curvature(const Design& design, const Theta& theta);

nlohmann::json to_json(const RiskCurvature& rc);
RiskCurvature curvature_from_json(const nlohmann::json& doc);

}  // namespace l1gi
