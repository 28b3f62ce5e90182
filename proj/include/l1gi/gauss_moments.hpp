#pragma once

#include "l1gi/core_model.hpp"
#include "l1gi/rng.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace l1gi {

/// (p+1)x(p+1) symmetric matrix in the layout of Q(X) = [[1, X^T], [X, X X^T]]:
/// index 0 is the intercept row/column, indices 1..p the predictors.
using BorderedMoment = MatrixXd;

/// [[scalar, v^T], [v, block]].
BorderedMoment bordered(double scalar, const VectorXd& v, const MatrixXd& block);

// ---------------------------------------------------------------------------
// Law of the margin M = alpha + X^T beta
// ---------------------------------------------------------------------------

struct MarginComponent {
  double weight;
  double mean;
  double variance;
};

struct MarginLaw {
  std::vector<MarginComponent> components;
};

/// Mixture-of-normals law of M. Throws NumericalError when beta = 0.
MarginLaw margin_law(const PredictorDistribution& dist, const Theta& theta);

/// Density of M at m.
double margin_density(const MarginLaw& law, double m);

/// Standard normal density.
double normal_pdf(double z);

/// Posterior probability of each component given M = m, evaluated in log
/// space so that |m| up to 1e6 neither underflows nor produces NaN.
VectorXd component_posteriors(const PredictorDistribution& dist, const Theta& theta, double m);

struct MixturePosterior {
  double plus;   // component with mean +mu
  double minus;  // component with mean -mu
};

/// Two-component specialization of component_posteriors.
MixturePosterior mixture_posterior(const PredictorDistribution& dist, const Theta& theta, double m);

// ---------------------------------------------------------------------------
// Conditional moments given M = m
// ---------------------------------------------------------------------------

/// E[X | M = m] for X ~ N(mean, cov):
/// mean + ((m - alpha - mean^T beta) / ||beta||) * cov nu / (nu^T cov nu).
VectorXd conditional_mean(const VectorXd& mean, const MatrixXd& cov, const Theta& theta, double m);

/// E[Q(X) | M = m] for one Gaussian component.
BorderedMoment component_conditional_moment(const GaussianComponent& comp, const Theta& theta, double m);

/// E[Q(X) | M = m]; for mixtures the per-component moments are weighted by the
/// posterior component probabilities.
BorderedMoment conditional_second_moment(const PredictorDistribution& dist, const Theta& theta, double m);

/// E[Q(X) | M = m] * f(m) with f the margin density. Computed as
/// sum_k pi_k phi_k(m) E_k[Q | m], which avoids the posterior ratio entirely.
BorderedMoment conditional_moment_density(const PredictorDistribution& dist, const Theta& theta, double m);

/// E[Q(X)], exact.
BorderedMoment unconditional_second_moment(const PredictorDistribution& dist);

// ---------------------------------------------------------------------------
// Quadrature over the margin
// ---------------------------------------------------------------------------

struct QuadratureOptions {
  int initial_nodes = 400;     // per component
  double tolerance = 1e-9;     // max-norm change between successive doublings
  int max_refinements = 8;
  double half_width_sd = 10.0;
};

/// Weight w(m) multiplying E[Q|m] f(m).
using MarginWeight = std::function<double(double)>;

/// Integral of E[Q(X) | M = m] * w(m) * f(m) dm by composite Gauss-Legendre on
/// [mean_k - 10 sd_k, mean_k + 10 sd_k] for each margin component k, with
/// panels split at the supplied breakpoints. Doubles the node count until two
/// successive results agree within options.tolerance; throws NumericalError
/// otherwise.
BorderedMoment integrate_margin(const PredictorDistribution& dist, const Theta& theta,
                                const MarginWeight& weight, std::span<const double> breakpoints = {},
                                const QuadratureOptions& options = {});

/// Scalar version: integral of w(m) * f(m) dm with the same scheme.
double integrate_margin_scalar(const MarginLaw& law, const MarginWeight& weight,
                               std::span<const double> breakpoints = {},
                               const QuadratureOptions& options = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order);

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// n x p matrix of i.i.d. draws; mixtures pick +mu or -mu with a fair coin.
MatrixXd sample_predictors(const PredictorDistribution& dist, Eigen::Index n, Rng& rng);

/// Y_i = +1 with probability g(zeta + X_i^T nu), else -1.
VectorXd sample_labels(const Design& design, const MatrixXd& X, Rng& rng);

}  // namespace l1gi
