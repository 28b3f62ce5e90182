#include "l1gi/gi_analysis.hpp"

#include "l1gi/error.hpp"
#include "l1gi/report.hpp"

#include <cmath>

namespace l1gi {

namespace {

Eigen::VectorXi to_index(const std::vector<int>& idx, int offset) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = idx[i] + offset;
  return out;
}

void check_partition(const ActivePartition& part, Eigen::Index p) {
  if (part.dim() != p) throw DomainError("gi: partition does not match matrix dimension");
  if (part.active.empty()) throw DomainError("gi: active set must be nonempty");
}

}  // namespace

VectorXd gi_coupling(const BorderedMoment& H, const ActivePartition& part, double max_condition) {
  if (H.rows() != H.cols() || H.rows() < 2) throw DomainError("gi: H must be square with an intercept row");
  check_partition(part, H.rows() - 1);
  const double h00 = H(0, 0);
  if (!(h00 > 0.0)) throw NumericalError("gi: intercept curvature must be positive");

  const auto a = to_index(part.active, 1);
  const auto ac = to_index(part.inactive, 1);
  const Eigen::VectorXi intercept = Eigen::VectorXi::Zero(1);

  const MatrixXd h_aa = H(a, a);
  const VectorXd h_a0 = H(a, intercept);
  const MatrixXd schur = h_aa - h_a0 * h_a0.transpose() / h00;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(schur, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition)
    throw NumericalError("gi: intercept-corrected active block is singular or ill-conditioned");

  const VectorXd z = schur.ldlt().solve(part.sign_active);
  if (ac.size() == 0) return VectorXd();
  const MatrixXd h_ca = H(ac, a);
  return h_ca * z;
}

double gi_index(const BorderedMoment& H, const ActivePartition& part) {
  const VectorXd v = gi_coupling(H, part);
  if (v.size() == 0) return 1.0;
  return 1.0 - v.cwiseAbs().maxCoeff();
}

VectorXd gi_coupling_second_moment(const PredictorDistribution& dist, const ActivePartition& part) {
  check_partition(part, dist.dim());
  const MatrixXd second = unconditional_second_moment(dist).bottomRightCorner(dist.dim(), dist.dim());
  const auto a = to_index(part.active, 0);
  const auto ac = to_index(part.inactive, 0);
  if (ac.size() == 0) return VectorXd();
  const MatrixXd s_aa = second(a, a);
  const MatrixXd s_ca = second(ac, a);
  return s_ca * s_aa.ldlt().solve(part.sign_active);
}

double gi_index_second_moment(const PredictorDistribution& dist, const ActivePartition& part) {
  if (!dist.zero_mean())
    throw ConfigError("second-moment GI shortcut requires zero-mean Gaussian predictors");
  const VectorXd v = gi_coupling_second_moment(dist, part);
  if (v.size() == 0) return 1.0;
  return 1.0 - v.cwiseAbs().maxCoeff();
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Inconsistent: return "inconsistent";
    case Verdict::Borderline: return "borderline";
  }
  return "borderline";
}

Verdict classify(double eta, double margin) {
  if (margin < 0.0) throw DomainError("classify: margin must be nonnegative");
  if (eta > margin) return Verdict::Consistent;
  if (eta < -margin) return Verdict::Inconsistent;
  return Verdict::Borderline;
}

Verdict GiReport::verdict() const {
  if (eta_logistic) return classify(*eta_logistic, margin);
  if (eta_svm) return classify(*eta_svm, margin);
  if (eta_second_moment) return classify(*eta_second_moment, margin);
  return Verdict::Borderline;
}

std::string GiReport::csv_header() { return "design_id,eta_logistic,eta_svm,eta_second_moment,verdict"; }

std::string GiReport::csv_row() const {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return design_id + "," + cell(eta_logistic) + "," + cell(eta_svm) + "," + cell(eta_second_moment) + "," +
         std::string(to_string(verdict()));
}

}  // namespace l1gi
