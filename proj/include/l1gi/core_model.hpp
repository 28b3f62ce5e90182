#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace l1gi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Probability profiles: P(Y = 1 | X) = g(zeta + X^T nu)
// ---------------------------------------------------------------------------

enum class ProfileKind { Logistic, Blip };

struct ProbabilityProfile {
  ProfileKind kind = ProfileKind::Logistic;

  double operator()(double r) const;
};

/// g1(r) = e^r / (1 + e^r) or g2(r) = (1 + r exp((1 - r^2) / 2)) / 2.
/// Throws DomainError for non-finite r.
double profile_eval(ProbabilityProfile profile, double r);

std::string_view to_string(ProfileKind kind);
ProfileKind profile_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// Predictor distributions
// ---------------------------------------------------------------------------

enum class DistKind { Gaussian, SymmetricMixture };

/// One Gaussian component of a predictor law.
struct GaussianComponent {
  double weight;
  VectorXd mean;
  MatrixXd cov;
};

/// Gaussian N(mean, cov) or the equal-weight mixture of N(mu, cov) and
/// N(-mu, cov). Immutable; the constructor checks that cov is SPD.
class PredictorDistribution {
 public:
  static PredictorDistribution gaussian(VectorXd mean, MatrixXd cov);
  static PredictorDistribution symmetric_mixture(VectorXd mu, MatrixXd cov);

  DistKind kind() const { return kind_; }
  Eigen::Index dim() const { return center_.size(); }
  /// Mean of the Gaussian, or mu of the mixture.
  const VectorXd& center() const { return center_; }
  const MatrixXd& cov() const { return cov_; }
  /// Lower Cholesky factor of cov.
  const MatrixXd& cov_factor() const { return chol_; }
  bool zero_mean() const { return kind_ == DistKind::Gaussian && center_.isZero(0.0); }

  /// The component list: one entry for Gaussian, two (+mu, -mu) for the mixture.
  const std::vector<GaussianComponent>& components() const { return components_; }

 private:
  PredictorDistribution(DistKind kind, VectorXd center, MatrixXd cov);

  DistKind kind_;
  VectorXd center_;
  MatrixXd cov_;
  MatrixXd chol_;
  std::vector<GaussianComponent> components_;
};

// ---------------------------------------------------------------------------
// Design: joint law of (Y, X)
// ---------------------------------------------------------------------------

struct Design {
  int p = 0;
  int q = 0;
  VectorXd nu;
  double sigma = 1.0;
  ProbabilityProfile profile;
  PredictorDistribution dist = PredictorDistribution::gaussian(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  double intercept_zeta = 0.0;

  /// P(Y = 1 | X = x).
  double response_probability(const Eigen::Ref<const VectorXd>& x) const;
};

/// Checks the structural invariants: unit nu supported exactly on the first q
/// coordinates, matching dimensions, sigma > 0. Throws ConfigError.
void validate(const Design& design);

/// max |nu_j| / min |nu_j| over the active block.
double active_ratio(const VectorXd& nu, int q);

// ---------------------------------------------------------------------------
// Parameters and partitions
// ---------------------------------------------------------------------------

enum class Loss { Logistic, Hinge };

std::string_view to_string(Loss loss);
Loss loss_from_string(std::string_view name);

/// Risk minimizer (alpha, beta). When produced by the c* search, beta = cstar * nu.
struct Theta {
  double alpha = 0.0;
  VectorXd beta;
  Loss loss = Loss::Logistic;
  double cstar = 0.0;
};

struct ActivePartition {
  std::vector<int> active;    // 0-based coefficient indices with beta_j != 0
  std::vector<int> inactive;
  VectorXd sign_active;       // +-1 per active index

  int dim() const { return static_cast<int>(active.size() + inactive.size()); }
};

/// Componentwise sign with sign(0) = 0.
template <typename Derived>
VectorXd sign_vector(const Eigen::MatrixBase<Derived>& v) {
  return v.derived().unaryExpr([](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
}

/// j is active iff |beta_j| > zero_tol.
ActivePartition partition_from_beta(const Eigen::Ref<const VectorXd>& beta, double zero_tol);

/// 1e-8 * max(1, ||beta||_inf).
double default_zero_tol(const Eigen::Ref<const VectorXd>& beta);

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json to_json(const Design& design);
Design design_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Theta& theta);
Theta theta_from_json(const nlohmann::json& doc);

nlohmann::json matrix_to_json(const MatrixXd& m);  // row-major flat
MatrixXd matrix_from_json(const nlohmann::json& flat, Eigen::Index rows, Eigen::Index cols);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& arr);

}  // namespace l1gi
