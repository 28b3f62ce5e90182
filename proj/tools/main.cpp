// Command-line front end for the experiment harness.
#include "l1gi/error.hpp"
#include "l1gi/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace l1gi;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config (JSON)");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  validate(cfg);
  return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

// A design file is either a bare design document or the wrapper written by
// sample-design / sweep.
Design read_design(const std::string& path) {
  const auto doc = read_json(path);
  return design_from_json(doc.contains("design") ? doc.at("design") : doc);
}

Design pick_design(const ExperimentConfig& cfg, const std::string& design_path, std::uint64_t index) {
  if (!design_path.empty()) return read_design(design_path);
  Rng rng(design_seed(cfg, index));
  return sample_design(cfg, rng);
}

Dataset read_dataset(const std::string& path) {
  const CsvTable t = load_csv(path);
  if (t.header.empty() || t.header[0] != "y") throw ConfigError("data csv: first column must be 'y'");
  Dataset d;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(t.header.size()) - 1;
  d.X.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != p + 1) throw ConfigError("data csv: ragged row");
    try {
      d.y(i) = std::stod(row[0]);
      for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = std::stod(row[static_cast<std::size_t>(j + 1)]);
    } catch (const std::exception&) {
      throw ConfigError("data csv: unparsable number in row " + std::to_string(i + 1));
    }
  }
  return d;
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::fprintf(stderr, "l1gi: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l1-penalized classifiers: GI index, regularization paths and sign-recovery experiments"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t index = 0;
  std::string design_path, data_path, loss_name = "logistic";
  int n = 500, replicates = 400, limit_count = 4000;
  double lambda_scaled = 0.0;

  auto* sample = app.add_subcommand("sample-design", "draw one design and write design_<id>.json");
  add_common(sample, common);
  sample->add_option("--index", index, "design number within the seed stream");

  auto* eta = app.add_subcommand("eta", "GI indices of one design (summary.csv)");
  add_common(eta, common);
  eta->add_option("--design", design_path, "design JSON (default: sampled from config)");
  eta->add_option("--index", index, "design number when sampling");

  auto* path = app.add_subcommand("fit-path", "regularization path for one dataset (path.csv)");
  add_common(path, common);
  path->add_option("--data", data_path, "CSV with columns y,x1..xp");
  path->add_option("--design", design_path, "design JSON to sample data from");
  path->add_option("--index", index, "design number when sampling");
  path->add_option("--n", n, "sample size when sampling")->check(CLI::PositiveNumber);
  path->add_option("--loss", loss_name, "logistic or hinge");

  auto* limit = app.add_subcommand("limit-sim", "compare sqrt(n) fluctuations with the limit law (limit.csv)");
  add_common(limit, common);
  limit->add_option("--design", design_path, "design JSON (default: sampled from config)");
  limit->add_option("--index", index, "design number when sampling");
  limit->add_option("--loss", loss_name, "logistic or hinge");
  limit->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  limit->add_option("--replicates", replicates, "Monte Carlo replicates")->check(CLI::Range(2, 1 << 30));
  limit->add_option("--lambda", lambda_scaled, "scaled penalty lambda_s (lambda_n = lambda_s sqrt(n))");
  limit->add_option("--limit-draws", limit_count, "draws from the limit sampler")->check(CLI::Range(2, 1 << 30));

  auto* sweep = app.add_subcommand("sweep", "eta sweep with sign recovery (records.csv, summary.csv, svg)");
  add_common(sweep, common);

  auto* contingency = app.add_subcommand("contingency", "2x2 MSC table over sampled designs");
  add_common(contingency, common);

  auto* report = app.add_subcommand("report", "redraw eta_scatter.svg from an existing summary.csv");
  add_common(report, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = resolve(common);

    if (*sample) {
      Rng rng(design_seed(cfg, index));
      const Design d = sample_design(cfg, rng);
      const auto dir = output_dir(cfg);
      const std::string id = design_id(index);
      write_text(dir / ("design_" + id + ".json"), nlohmann::json{{"id", id}, {"design", to_json(d)}}.dump(2) + "\n");
      std::printf("%s\n", (dir / ("design_" + id + ".json")).string().c_str());
    } else if (*eta) {
      const Design d = pick_design(cfg, design_path, index);
      const DesignAnalysis a = analyze_design(cfg, d, index);
      const GiReport r = a.report(cfg.verdict_margin);
      const std::string text = GiReport::csv_header() + "\n" + r.csv_row() + "\n";
      write_text(output_dir(cfg) / "summary.csv", text);
      std::fputs(text.c_str(), stdout);
    } else if (*path) {
      const Loss loss = loss_from_string(loss_name);
      Dataset data;
      if (!data_path.empty()) {
        data = read_dataset(data_path);
      } else {
        const Design d = pick_design(cfg, design_path, index);
        Rng rng(derive_seed(cfg.seed, {0x66697470617468ULL, index, static_cast<std::uint64_t>(n)}));
        data = sample_dataset(d, n, rng);
      }
      PathOptions opts;
      opts.grid = cfg.grid;
      const RegularizationPath rp = regularization_path(loss, data, opts);
      emit_csv(path_to_csv(rp), output_dir(cfg) / "path.csv");
      std::printf("data %s: %zu path points\n", rp.data_id.c_str(), rp.points.size());
    } else if (*limit) {
      const Loss loss = loss_from_string(loss_name);
      ExperimentConfig one = cfg;
      one.losses = {loss};
      const Design d = pick_design(cfg, design_path, index);
      const DesignAnalysis a = analyze_design(one, d, index);
      const LimitCheckReport rep = run_limit_check(cfg, d, a.per_loss.at(loss), n, replicates, lambda_scaled, limit_count);
      emit_csv(limit_report_csv(rep), output_dir(cfg) / "limit.csv");
      std::printf("relative Frobenius error %.6g\n", rep.relative_error);
    } else if (*sweep) {
      const SweepResult res = run_eta_sweep(cfg);
      write_sweep(cfg, res, output_dir(cfg));
      std::printf("%zu designs, %d failed\n", res.rows.size(), res.failed_designs);
    } else if (*contingency) {
      const ContingencyResult res = run_msc_contingency(cfg);
      const auto dir = output_dir(cfg);
      emit_csv(contingency_csv(res.table), dir / "contingency.csv");
      SweepResult as_sweep;
      as_sweep.rows = res.rows;
      ExperimentConfig no_props = cfg;
      no_props.n_list.clear();
      emit_csv(summary_csv(no_props, as_sweep), dir / "summary.csv");
      const auto& t = res.table;
      std::printf("both %d, logistic only %d, svm only %d, neither %d, borderline %d, failed %d\n", t.both,
                  t.logistic_only, t.svm_only, t.neither, t.borderline, t.failed);
    } else if (*report) {
      const fs::path dir(cfg.output_dir);
      const CsvTable t = load_csv(dir / "summary.csv");
      const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
      std::vector<ScatterSeries> series;
      for (Loss loss : cfg.losses) {
        ScatterSeries s;
        s.label = std::string(to_string(loss)) + " n=" + std::to_string(n_max);
        const auto xe = t.column(loss == Loss::Logistic ? "eta_logistic" : "eta_svm");
        const auto ye = t.column("prop_" + std::string(to_string(loss)) + "_n" + std::to_string(n_max));
        for (const auto& row : t.rows) {
          if (row[xe].empty() || row[ye].empty()) continue;
          s.xs.push_back(std::stod(row[xe]));
          s.ys.push_back(std::stod(row[ye]));
        }
        series.push_back(std::move(s));
      }
      emit_svg_scatter(series, dir / "eta_scatter.svg", "Sign-correct paths against the GI index");
    }
  } catch (const ConfigError& e) {
    return report_error("config error", e, 2);
  } catch (const DomainError& e) {
    return report_error("invalid input", e, 2);
  } catch (const NumericalError& e) {
    return report_error("numerical failure", e, 3);
  } catch (const std::exception& e) {
    return report_error("error", e, 1);
  }
  return 0;
}
