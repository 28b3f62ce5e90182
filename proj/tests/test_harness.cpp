#include "l1gi/error.hpp"
#include "l1gi/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace l1gi;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.p = 4;
  c.q = 2;
  c.sigma = 1.5;
  c.n_list = {60};
  c.replicates = 4;
  c.grid = {12, 1e-2};
  c.num_designs = 3;
  c.mc_cstar = 20000;
  return c;
}

// Identity-covariance design with equal active loadings and nu^T Sigma nu = sigma^2.
Design identity_design(int p, int q, double sigma) {
  Design d;
  d.p = p;
  d.q = q;
  d.sigma = sigma;
  d.nu = VectorXd::Zero(p);
  d.nu.head(q).setConstant(1.0 / std::sqrt(q));
  d.dist = PredictorDistribution::gaussian(VectorXd::Zero(p), sigma * sigma * MatrixXd::Identity(p, p));
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("l1gi_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config json round trip and validation") {
  ExperimentConfig c = small_config();
  c.family = Family::Mixture;
  c.losses = {Loss::Hinge};
  c.profile.kind = ProfileKind::Blip;
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.family == Family::Mixture);
  CHECK(back.grid.count == 12);

  CHECK(config_from_json(nlohmann::json::object()).p == 8);
  CHECK_THROWS_AS(config_from_json({{"replicates", 0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"q", 9}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"grid", {{"epsilon", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"grid", {{"K", 1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"p", "eight"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"losses", {"probit"}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"family", "laplace"}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::count(hits.begin(), hits.end(), 1) == 100);
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 30) throw NumericalError("item " + std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()) == "item 7");
  }
}

TEST_CASE("direction sampling") {
  Rng rng(1);
  VectorXd one = sample_direction(3, 1, rng);
  CHECK(std::abs(one(0)) == 1.0);
  CHECK(one.tail(2).isZero(0.0));
  for (int t = 0; t < 1000; ++t) {
    const VectorXd nu = sample_direction(8, 4, rng);
    CHECK(std::abs(nu.norm() - 1.0) < 1e-14);
    CHECK(active_ratio(nu, 4) <= 5.0);
    CHECK(nu.tail(4).isZero(0.0));
  }
}

TEST_CASE("correlation sampling") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const MatrixXd R = sample_correlation(6, rng);
    CHECK((R.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK((R - R.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(R).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("design sampling") {
  ExperimentConfig c = small_config();
  for (Family fam : {Family::Gaussian, Family::Mixture}) {
    c.family = fam;
    Rng a(design_seed(c, 5)), b(design_seed(c, 5));
    const Design d1 = sample_design(c, a), d2 = sample_design(c, b);
    CHECK(to_json(d1) == to_json(d2));
    const double spread = d1.nu.dot(d1.dist.cov() * d1.nu);
    const double want = fam == Family::Gaussian ? c.sigma * c.sigma : 0.36 * c.sigma * c.sigma;
    CHECK(spread == doctest::Approx(want).epsilon(1e-12));
    CHECK(d1.dist.zero_mean() == (fam == Family::Gaussian));
  }
  CHECK(design_seed(c, 1) != design_seed(c, 2));
  CHECK(design_id(7) == "d0007");
}

TEST_CASE("replicate guards") {
  const Design d = identity_design(3, 1, 1.0);
  ExperimentConfig c = small_config();
  c.p = 3;
  c.q = 1;
  c.losses = {Loss::Logistic};
  const DesignAnalysis an = analyze_design(c, d, 0);
  const SignRecoveryTask task{&d, &an.per_loss.at(Loss::Logistic), "d0000", 0, 50};
  c.replicates = 0;
  CHECK_THROWS_AS(run_sign_recovery(c, task), ConfigError);
  CHECK_THROWS_AS(summarize_replicates({}), ConfigError);

  std::vector<ExperimentRecord> recs(40);
  for (int i = 0; i < 40; ++i) recs[i].found = i % 2 == 0;
  recs[1].failed = true;
  recs[3].failed = true;
  const auto ok = summarize_replicates(recs);
  CHECK(ok.failures == 2);
  CHECK(ok.proportion == doctest::Approx(20.0 / 38.0).epsilon(1e-15));
  recs[5].failed = true;
  CHECK_THROWS_AS(summarize_replicates(recs), NumericalError);
}

TEST_CASE("sign recovery on an easy design") {
  ExperimentConfig c;
  c.p = 8;
  c.q = 4;
  c.sigma = 2.0;
  c.losses = {Loss::Logistic};
  c.replicates = 50;
  c.mc_cstar = 100000;
  const Design d = identity_design(8, 4, 2.0);
  const DesignAnalysis an = analyze_design(c, d, 0);
  CHECK(an.per_loss.at(Loss::Logistic).eta == 1.0);
  const SignRecoveryTask task{&d, &an.per_loss.at(Loss::Logistic), "d0000", 0, 500};
  const auto res = run_sign_recovery(c, task);
  CHECK(res.failures == 0);
  CHECK(res.proportion >= 0.9);
  // regression fixture
  CHECK(res.proportion == 1.0);

  // same answer with more workers
  c.threads = 3;
  const auto again = run_sign_recovery(c, task);
  CHECK(to_csv_string(records_csv(again.records)) == to_csv_string(records_csv(res.records)));
}

TEST_CASE("gaussian sweep") {
  ExperimentConfig c = small_config();
  const SweepResult s = run_eta_sweep(c);
  CHECK(s.failed_designs == 0);
  REQUIRE(s.rows.size() == 3);
  for (const auto& row : s.rows) {
    CHECK(row.status == "ok");
    REQUIRE(row.report.eta_logistic.has_value());
    CHECK(std::abs(*row.report.eta_logistic - *row.report.eta_svm) < 1e-4);
    CHECK(std::abs(*row.report.eta_logistic - *row.report.eta_second_moment) < 1e-4);
    CHECK(*row.report.eta_logistic <= 1.0 + 1e-9);
    for (Loss l : c.losses) CHECK(row.proportion.at(l).count(60) == 1);
  }
  CHECK(s.records.size() == 3u * 2u * 1u * 4u);

  const CsvTable sum = summary_csv(c, s);
  CHECK(sum.header == std::vector<std::string>{"design_id", "status", "eta_logistic", "eta_svm", "eta_second_moment",
                                               "verdict_logistic", "verdict_svm", "prop_logistic_n60",
                                               "prop_hinge_n60"});
  const CsvTable rec = records_csv(s.records);
  CHECK(rec.header == std::vector<std::string>{"design_id", "loss", "eta", "n", "replicate", "found", "lambda_found",
                                               "status"});

  const fs::path dir = scratch("sweep");
  write_sweep(c, s, dir);
  for (const char* f : {"records.csv", "summary.csv", "eta_scatter.svg", "design_d0000.json"})
    CHECK(fs::exists(dir / f));
  // bit-exact CSV round trip
  const CsvTable loaded = load_csv(dir / "summary.csv");
  CHECK(loaded.header == sum.header);
  CHECK(loaded.rows == sum.rows);
  const double eta0 = std::stod(loaded.rows[0][loaded.column("eta_logistic")]);
  CHECK(eta0 == *s.rows[0].report.eta_logistic);
  const std::string svg = slurp(dir / "eta_scatter.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("GI index") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("sweep determinism across thread counts") {
  ExperimentConfig c = small_config();
  c.num_designs = 2;
  const std::string one = to_csv_string(records_csv(run_eta_sweep(c).records));
  c.threads = 4;
  const SweepResult s4 = run_eta_sweep(c);
  CHECK(to_csv_string(records_csv(s4.records)) == one);
  CHECK(to_csv_string(summary_csv(c, s4)) == to_csv_string(summary_csv(c, run_eta_sweep(c))));
}

TEST_CASE("empty sweep writes headers only") {
  ExperimentConfig c = small_config();
  c.num_designs = 0;
  const SweepResult s = run_eta_sweep(c);
  CHECK(s.rows.empty());
  const fs::path dir = scratch("empty");
  write_sweep(c, s, dir);
  const CsvTable t = load_csv(dir / "records.csv");
  CHECK(t.rows.empty());
  CHECK(t.header.size() == 8);
  fs::remove_all(dir);
}

TEST_CASE("unwritable output") {
  ExperimentConfig c = small_config();
  c.num_designs = 0;
  CHECK_THROWS_AS(write_sweep(c, run_eta_sweep(c), "/proc/l1gi_nope"), IoError);
  CHECK_THROWS_AS(emit_csv(contingency_csv({}), "/proc/l1gi_nope/x.csv"), IoError);
}

TEST_CASE("contingency") {
  ExperimentConfig c = small_config();
  c.num_designs = 1;
  const auto one = run_msc_contingency(c);
  CHECK(one.table.classified() + one.table.borderline + one.table.failed == 1);

  c.num_designs = 6;
  const auto gauss = run_msc_contingency(c);
  CHECK(gauss.table.off_diagonal() == 0);
  CHECK(gauss.rows.size() == 6);

  const CsvTable t = contingency_csv(gauss.table);
  CHECK(t.header == std::vector<std::string>{"cell", "count", "proportion"});
  REQUIRE(t.rows.size() == 6);
  CHECK(t.rows[0][0] == "both_msc");
  CHECK(t.rows[5][0] == "failed");

  c.losses = {Loss::Logistic};
  CHECK_THROWS_AS(run_msc_contingency(c), ConfigError);

  Contingency k;
  k.both = 5;
  k.neither = 4;
  k.svm_only = 1;
  CHECK(k.both_largest());
  CHECK(k.off_diagonal() == 1);
  k.neither = 5;
  CHECK_FALSE(k.both_largest());
}

TEST_CASE("limit check") {
  ExperimentConfig c;
  c.p = 2;
  c.q = 1;
  c.losses = {Loss::Logistic, Loss::Hinge};
  c.mc_cstar = 50000;
  const Design d = identity_design(2, 1, 1.0);
  const DesignAnalysis an = analyze_design(c, d, 0);
  CHECK_THROWS_AS(run_limit_check(c, d, an.per_loss.at(Loss::Hinge), 200, 10), ConfigError);

  const auto r1 = run_limit_check(c, d, an.per_loss.at(Loss::Logistic), 200, 20);
  const auto r2 = run_limit_check(c, d, an.per_loss.at(Loss::Logistic), 200, 20);
  CHECK(r1.empirical_cov == r2.empirical_cov);
  CHECK(r1.target_cov.rows() == 3);
  CHECK(r1.sandwich == r1.target_cov);
  CHECK(limit_report_csv(r1).rows.size() >= 1);

  const auto pen = run_limit_check(c, d, an.per_loss.at(Loss::Hinge), 200, 10, 0.5, 500);
  CHECK(pen.lambda_scaled == 0.5);
  CHECK(pen.target_cov.rows() == 3);
}

TEST_CASE("brute-force oracle") {
  Rng rng(3);
  const Design d = identity_design(2, 1, 1.0);
  const Dataset data = sample_dataset(d, 20, rng);
  const OracleFit big = oracle_grid_fit(data, Loss::Hinge, 1e6, 2.0, 0.1);
  CHECK((big.coefficients.array() == 0.0).all());
  const OracleFit bigl = oracle_grid_fit(data, Loss::Logistic, 1e6, 2.0, 0.1);
  CHECK((bigl.coefficients.array() == 0.0).all());

  const Dataset wide = sample_dataset(identity_design(4, 1, 1.0), 10, rng);
  CHECK_THROWS_AS(oracle_grid_fit(wide, Loss::Logistic, 1.0, 1.0, 0.5), ConfigError);
}
