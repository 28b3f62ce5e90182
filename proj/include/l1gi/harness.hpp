#pragma once

#include "l1gi/core_model.hpp"
#include "l1gi/gi_analysis.hpp"
#include "l1gi/l1_solvers.hpp"
#include "l1gi/report.hpp"
#include "l1gi/risk_engine.hpp"
#include "l1gi/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace l1gi {

enum class Family { Gaussian, Mixture };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

struct ExperimentConfig {
  std::uint64_t seed = 20240601;
  int p = 8;
  int q = 4;
  double sigma = 1.0;
  ProbabilityProfile profile;
  Family family = Family::Gaussian;
  std::vector<Loss> losses{Loss::Logistic, Loss::Hinge};
  std::vector<int> n_list{100, 500, 1000};
  int replicates = 50;
  PathGrid grid;
  int num_designs = 200;
  std::int64_t mc_cstar = 1'000'000;
  std::string output_dir = "out";
  int threads = 1;
  double sign_zero_tol = 1e-8;   // |b_j| at or below counts as zero in sign checks
  double verdict_margin = 1e-3;  // |eta| at or below is Borderline
};

/// Throws ConfigError on non-positive counts, q > p, ratio outside (0, 1), etc.
void validate(const ExperimentConfig& cfg);

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Runs body(i) for i in [0, count) on `threads` workers pulling indices from
/// a shared counter. The first exception (lowest index) is rethrown after all
/// workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

/// nu_A uniform on the unit sphere of R^q, redrawn while max|nu_j| / min|nu_j|
/// over A exceeds 5. Throws NumericalError after 1e4 rejected attempts.
VectorXd sample_direction(int p, int q, Rng& rng, int* attempts = nullptr);

/// Wishart(I_p, p) draw normalized to unit diagonal. Redraws (bounded) when the
/// draw is numerically singular.
MatrixXd sample_correlation(int p, Rng& rng);

/// Random design following the simulation protocol of the study: Gaussian
/// designs have zero mean and nu^T Sigma nu = sigma^2; mixture designs use
/// means +-(4/5) sigma (|chi| nu + w) and nu^T Sigma nu = (9/25) sigma^2.
Design sample_design(const ExperimentConfig& cfg, Rng& rng);

/// Seed stream of design number `index` under `cfg.seed`.
std::uint64_t design_seed(const ExperimentConfig& cfg, std::uint64_t index);

std::string design_id(std::uint64_t index);

struct LossAnalysis {
  Theta theta;
  BorderedMoment hessian;
  ActivePartition partition;
  double eta = 0.0;
};

struct DesignAnalysis {
  std::string id;
  std::uint64_t index = 0;
  Design design;
  std::map<Loss, LossAnalysis> per_loss;
  std::optional<double> eta_second_moment;

  GiReport report(double margin) const;
};

/// c* per loss (seeded from the design stream), Hessians, GI indices, and the
/// second-moment GI index when the design is a zero-mean Gaussian.
DesignAnalysis analyze_design(const ExperimentConfig& cfg, const Design& design, std::uint64_t index);

// ---------------------------------------------------------------------------
// Sign recovery
// ---------------------------------------------------------------------------

struct ExperimentRecord {
  std::string design_id;
  Loss loss = Loss::Logistic;
  double eta = 0.0;
  int n = 0;
  int replicate = 0;
  bool found = false;
  std::optional<double> lambda_found;
  bool failed = false;
  std::string error;
  double wall_time = 0.0;  // seconds; diagnostic only, never written to CSV
};

struct SignRecoveryResult {
  std::vector<ExperimentRecord> records;
  int failures = 0;
  double proportion = 0.0;  // found / (replicates - failures)
};

struct SignRecoveryTask {
  const Design* design = nullptr;
  const LossAnalysis* analysis = nullptr;
  std::string design_id;
  std::uint64_t design_index = 0;
  int n = 0;
};

/// One replicate: draw (X, y) of size n from its own seed stream, compute the
/// path and test it against the sign pattern of the population beta.
ExperimentRecord run_replicate(const ExperimentConfig& cfg, const SignRecoveryTask& task, int replicate);

/// Errors with ConfigError when replicates == 0 and NumericalError when more
/// than 5% of the replicates fail.
SignRecoveryResult run_sign_recovery(const ExperimentConfig& cfg, const SignRecoveryTask& task);

/// Aggregates an already computed block of replicates (same failure rule).
SignRecoveryResult summarize_replicates(std::vector<ExperimentRecord> records);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct DesignRow {
  std::string id;
  std::string status = "ok";  // or the failure message
  GiReport report;
  std::map<Loss, std::map<int, double>> proportion;  // loss -> n -> proportion
};

struct SweepResult {
  std::vector<DesignRow> rows;
  std::vector<ExperimentRecord> records;
  std::vector<DesignAnalysis> analyses;  // successful designs only
  int failed_designs = 0;
};

SweepResult run_eta_sweep(const ExperimentConfig& cfg);

CsvTable records_csv(const std::vector<ExperimentRecord>& records);
CsvTable summary_csv(const ExperimentConfig& cfg, const SweepResult& sweep);

/// Scatter of the largest-n sign-correct proportion against eta, one series
/// per loss.
std::vector<ScatterSeries> sweep_scatter(const ExperimentConfig& cfg, const SweepResult& sweep);

/// Writes records.csv, summary.csv, eta_scatter.svg and design_<id>.json.
void write_sweep(const ExperimentConfig& cfg, const SweepResult& sweep, const std::filesystem::path& dir);

struct Contingency {
  int both = 0;           // logistic MSC and SVM MSC
  int logistic_only = 0;
  int svm_only = 0;
  int neither = 0;
  int borderline = 0;     // either eta within the verdict margin
  int failed = 0;

  int classified() const { return both + logistic_only + svm_only + neither; }
  int off_diagonal() const { return logistic_only + svm_only; }
  bool both_largest() const { return both > logistic_only && both > svm_only && both > neither; }
};

struct ContingencyResult {
  Contingency table;
  std::vector<DesignRow> rows;
};

/// Classifies num_designs sampled designs by the sign of eta under each loss.
/// Needs both losses in cfg.losses.
ContingencyResult run_msc_contingency(const ExperimentConfig& cfg);

CsvTable contingency_csv(const Contingency& table);

// ---------------------------------------------------------------------------
// Limit law check
// ---------------------------------------------------------------------------

struct LimitCheckReport {
  int n = 0;
  int replicates = 0;
  double lambda_scaled = 0.0;
  MatrixXd empirical_cov;  // of sqrt(n) (theta_hat - theta)
  MatrixXd target_cov;     // H^{-1} J H^{-1} when lambda_scaled == 0, sampler covariance otherwise
  MatrixXd sandwich;
  double relative_error = 0.0;  // ||empirical - target||_F / ||target||_F
  int failures = 0;
};

/// lambda_scaled = 0 gives unpenalized fits (logistic only; hinge is refused).
/// For lambda_scaled > 0 the fits use lambda_n = lambda_scaled sqrt(n) and the
/// target is the covariance of `limit_count` limit-sampler draws.
LimitCheckReport run_limit_check(const ExperimentConfig& cfg, const Design& design, const LossAnalysis& analysis,
                                 int n, int replicates, double lambda_scaled = 0.0, int limit_count = 4000);

CsvTable limit_report_csv(const LimitCheckReport& report);

/// Sample covariance (rows are draws).
MatrixXd sample_covariance(const MatrixXd& draws);

// ---------------------------------------------------------------------------
// Brute-force oracle (tests only)
// ---------------------------------------------------------------------------

struct OracleFit {
  double objective = 0.0;
  double intercept = 0.0;
  VectorXd coefficients;
};

/// Exhaustive grid over [-box, box]^{p+1} followed by a coordinatewise
/// golden-section polish. For the hinge loss the best vertex of the kink
/// arrangement inside the box is also considered, since coordinate moves stall
/// on ridges. Refuses p > 3.
OracleFit oracle_grid_fit(const Dataset& data, Loss loss, double lambda, double box, double step);

/// Draws (X, y) of size n from the design.
Dataset sample_dataset(const Design& design, Eigen::Index n, Rng& rng);

}  // namespace l1gi
