#pragma once

#include "l1gi/core_model.hpp"
#include "l1gi/gauss_moments.hpp"

#include <optional>
#include <string>

namespace l1gi {

/// Vector H_{A^c,A} [H_{A,A} - H_{A,a} H_{a,a}^{-1} H_{a,A}]^{-1} sign(beta_A),
/// where a is the intercept row of the bordered matrix. Empty when A^c is empty.
///
/// The intercept-corrected Schur block is factored with LDLT; a condition
/// number above `max_condition` is reported as a NumericalError rather than
/// producing a meaningless index.
VectorXd gi_coupling(const BorderedMoment& H, const ActivePartition& partition, double max_condition = 1e12);

/// GI index eta = 1 - ||gi_coupling(H, partition)||_inf; 1 when A^c is empty.
double gi_index(const BorderedMoment& H, const ActivePartition& partition);

/// E[X_{A^c} X_A^T] E[X_A X_A^T]^{-1} sign(beta_A) from exact moments.
VectorXd gi_coupling_second_moment(const PredictorDistribution& dist, const ActivePartition& partition);

/// Shortcut eta for zero-mean Gaussian predictors. Throws ConfigError for any
/// other predictor law.
double gi_index_second_moment(const PredictorDistribution& dist, const ActivePartition& partition);

enum class Verdict { Consistent, Inconsistent, Borderline };

std::string_view to_string(Verdict v);

/// Consistent if eta > margin, Inconsistent if eta < -margin, else Borderline.
Verdict classify(double eta, double margin = 1e-3);

struct GiReport {
  std::string design_id;
  std::optional<double> eta_logistic;
  std::optional<double> eta_svm;
  std::optional<double> eta_second_moment;
  double margin = 1e-3;

  /// Verdict from the first available index in the order logistic, svm, second moment.
  Verdict verdict() const;
  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace l1gi
