#include "l1gi/core_model.hpp"

#include "l1gi/error.hpp"

#include <cmath>

namespace l1gi {

double profile_eval(ProbabilityProfile profile, double r) {
  if (!std::isfinite(r)) throw DomainError("profile_eval: non-finite argument");
  switch (profile.kind) {
    case ProfileKind::Logistic:
      if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
      return std::exp(r) / (1.0 + std::exp(r));
    case ProfileKind::Blip:
      return 0.5 * (1.0 + r * std::exp(0.5 * (1.0 - r * r)));
  }
  return 0.5;
}

double ProbabilityProfile::operator()(double r) const { return profile_eval(*this, r); }

std::string_view to_string(ProfileKind kind) {
  return kind == ProfileKind::Logistic ? "logistic" : "blip";
}

ProfileKind profile_from_string(std::string_view name) {
  if (name == "logistic" || name == "g1") return ProfileKind::Logistic;
  if (name == "blip" || name == "g2") return ProfileKind::Blip;
  throw ConfigError("unknown probability profile '" + std::string(name) + "'");
}

std::string_view to_string(Loss loss) { return loss == Loss::Logistic ? "logistic" : "hinge"; }

Loss loss_from_string(std::string_view name) {
  if (name == "logistic") return Loss::Logistic;
  if (name == "hinge" || name == "svm") return Loss::Hinge;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

PredictorDistribution::PredictorDistribution(DistKind kind, VectorXd center, MatrixXd cov)
    : kind_(kind), center_(std::move(center)), cov_(std::move(cov)) {
  const auto p = center_.size();
  if (p < 1 || cov_.rows() != p || cov_.cols() != p)
    throw ConfigError("predictor distribution: dimension mismatch");
  if (!center_.allFinite() || !cov_.allFinite())
    throw ConfigError("predictor distribution: non-finite parameters");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov_.cwiseAbs().maxCoeff()))
    throw ConfigError("predictor distribution: covariance is not symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  Eigen::LLT<MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw ConfigError("predictor distribution: covariance is not positive definite");
  chol_ = llt.matrixL();

  if (kind_ == DistKind::Gaussian) {
    components_.push_back({1.0, center_, cov_});
  } else {
    components_.push_back({0.5, center_, cov_});
    components_.push_back({0.5, -center_, cov_});
  }
}

PredictorDistribution PredictorDistribution::gaussian(VectorXd mean, MatrixXd cov) {
  return PredictorDistribution(DistKind::Gaussian, std::move(mean), std::move(cov));
}

PredictorDistribution PredictorDistribution::symmetric_mixture(VectorXd mu, MatrixXd cov) {
  return PredictorDistribution(DistKind::SymmetricMixture, std::move(mu), std::move(cov));
}

// ---------------------------------------------------------------------------

double Design::response_probability(const Eigen::Ref<const VectorXd>& x) const {
  return profile_eval(profile, intercept_zeta + x.dot(nu));
}

double active_ratio(const VectorXd& nu, int q) {
  const auto head = nu.head(q).cwiseAbs();
  return head.maxCoeff() / head.minCoeff();
}

void validate(const Design& d) {
  if (d.p < 1 || d.q < 1 || d.q > d.p) throw ConfigError("design: need 1 <= q <= p");
  if (d.nu.size() != d.p || d.dist.dim() != d.p) throw ConfigError("design: dimension mismatch");
  if (!(d.sigma > 0.0)) throw ConfigError("design: sigma must be positive");
  if (std::abs(d.nu.norm() - 1.0) > 1e-9) throw ConfigError("design: nu must have unit norm");
  for (int j = 0; j < d.p; ++j) {
    if (j < d.q && d.nu(j) == 0.0) throw ConfigError("design: nu_j must be nonzero for j <= q");
    if (j >= d.q && d.nu(j) != 0.0) throw ConfigError("design: nu_j must be zero for j > q");
  }
  if (!std::isfinite(d.intercept_zeta)) throw ConfigError("design: non-finite intercept");
}

// ---------------------------------------------------------------------------

ActivePartition partition_from_beta(const Eigen::Ref<const VectorXd>& beta, double zero_tol) {
  ActivePartition part;
  std::vector<double> signs;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta(j)) > zero_tol) {
      part.active.push_back(static_cast<int>(j));
      signs.push_back(beta(j) > 0.0 ? 1.0 : -1.0);
    } else {
      part.inactive.push_back(static_cast<int>(j));
    }
  }
  part.sign_active = Eigen::Map<VectorXd>(signs.data(), static_cast<Eigen::Index>(signs.size()));
  return part;
}

double default_zero_tol(const Eigen::Ref<const VectorXd>& beta) {
  const double scale = beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * std::max(1.0, scale);
}

// ---------------------------------------------------------------------------

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json flat = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

MatrixXd matrix_from_json(const nlohmann::json& flat, Eigen::Index rows, Eigen::Index cols) {
  if (!flat.is_array() || static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw ConfigError("matrix field has wrong size");
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat.at(i * cols + j).get<double>();
  return m;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vector_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("vector field must be an array");
  const auto values = arr.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json to_json(const Design& d) {
  nlohmann::json dist;
  if (d.dist.kind() == DistKind::Gaussian) {
    dist["variant"] = "gaussian";
    dist["mean"] = vector_to_json(d.dist.center());
  } else {
    dist["variant"] = "mixture";
    dist["mu"] = vector_to_json(d.dist.center());
  }
  dist["cov"] = matrix_to_json(d.dist.cov());
  return {{"p", d.p},
          {"q", d.q},
          {"nu", vector_to_json(d.nu)},
          {"sigma", d.sigma},
          {"profile", std::string(to_string(d.profile.kind))},
          {"intercept_zeta", d.intercept_zeta},
          {"dist", dist}};
}

Design design_from_json(const nlohmann::json& doc) {
  try {
    Design d;
    d.p = doc.at("p").get<int>();
    d.q = doc.at("q").get<int>();
    d.nu = vector_from_json(doc.at("nu"));
    d.sigma = doc.at("sigma").get<double>();
    d.profile.kind = profile_from_string(doc.at("profile").get<std::string>());
    d.intercept_zeta = doc.value("intercept_zeta", 0.0);
    const auto& dist = doc.at("dist");
    const auto variant = dist.at("variant").get<std::string>();
    MatrixXd cov = matrix_from_json(dist.at("cov"), d.p, d.p);
    if (variant == "gaussian") {
      d.dist = PredictorDistribution::gaussian(vector_from_json(dist.at("mean")), std::move(cov));
    } else if (variant == "mixture") {
      d.dist = PredictorDistribution::symmetric_mixture(vector_from_json(dist.at("mu")), std::move(cov));
    } else {
      throw ConfigError("unknown predictor variant '" + variant + "'");
    }
    validate(d);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("design json: ") + e.what());
  }
}

nlohmann::json to_json(const Theta& t) {
  return {{"alpha", t.alpha},
          {"beta", vector_to_json(t.beta)},
          {"loss", std::string(to_string(t.loss))},
          {"cstar", t.cstar}};
}

Theta theta_from_json(const nlohmann::json& doc) {
  try {
    Theta t;
    t.alpha = doc.at("alpha").get<double>();
    t.beta = vector_from_json(doc.at("beta"));
    t.loss = loss_from_string(doc.at("loss").get<std::string>());
    t.cstar = doc.value("cstar", 0.0);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("theta json: ") + e.what());
  }
}

}  // namespace l1gi
