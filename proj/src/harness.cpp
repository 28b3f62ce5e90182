#include "l1gi/harness.hpp"

#include "l1gi/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace l1gi {

namespace {

// Stream tags keep the per-purpose seed families disjoint.
constexpr std::uint64_t kDesignTag = 0x64657369676eULL;
constexpr std::uint64_t kCstarTag = 0x6373746172ULL;
constexpr std::uint64_t kReplicateTag = 0x7265706cULL;
constexpr std::uint64_t kLimitTag = 0x6c696d6974ULL;

std::string clean_message(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::string prop_column(Loss loss, int n) { return "prop_" + std::string(to_string(loss)) + "_n" + std::to_string(n); }

}  // namespace

std::string_view to_string(Family family) { return family == Family::Gaussian ? "gaussian" : "mixture"; }

Family family_from_string(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "mixture") return Family::Mixture;
  throw ConfigError("unknown design family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void validate(const ExperimentConfig& c) {
  if (c.p < 1 || c.q < 1 || c.q > c.p) throw ConfigError("config: need 1 <= q <= p");
  if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw ConfigError("config: sigma must be positive");
  if (c.losses.empty()) throw ConfigError("config: loss set is empty");
  if (c.n_list.empty()) throw ConfigError("config: n_list is empty");
  for (int n : c.n_list)
    if (n < 1) throw ConfigError("config: sample sizes must be positive");
  if (c.replicates < 1) throw ConfigError("config: replicates must be positive");
  if (c.grid.count < 2) throw ConfigError("config: grid K must be at least 2");
  if (!(c.grid.ratio > 0.0 && c.grid.ratio < 1.0)) throw ConfigError("config: grid epsilon must lie in (0, 1)");
  if (c.num_designs < 0) throw ConfigError("config: num_designs must be nonnegative");
  if (c.mc_cstar < 10000) throw ConfigError("config: mc_cstar must be at least 1e4");
  if (c.threads < 1) throw ConfigError("config: threads must be positive");
  if (!(c.sign_zero_tol >= 0.0) || !(c.verdict_margin >= 0.0)) throw ConfigError("config: tolerances must be >= 0");
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  static const std::vector<std::string> known{"seed",       "p",         "q",        "sigma",     "profile",
                                              "family",     "losses",    "n_list",   "replicates", "grid",
                                              "num_designs", "mc_cstar", "output_dir", "threads", "sign_zero_tol",
                                              "verdict_margin"};
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, _] : doc.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ConfigError("config: unknown key '" + key + "'");
    c.seed = doc.value("seed", c.seed);
    c.p = doc.value("p", c.p);
    c.q = doc.value("q", c.q);
    c.sigma = doc.value("sigma", c.sigma);
    if (doc.contains("profile")) c.profile.kind = profile_from_string(doc.at("profile").get<std::string>());
    if (doc.contains("family")) c.family = family_from_string(doc.at("family").get<std::string>());
    if (doc.contains("losses")) {
      c.losses.clear();
      for (const auto& l : doc.at("losses")) {
        const Loss loss = loss_from_string(l.get<std::string>());
        if (std::find(c.losses.begin(), c.losses.end(), loss) == c.losses.end()) c.losses.push_back(loss);
      }
    }
    if (doc.contains("n_list")) c.n_list = doc.at("n_list").get<std::vector<int>>();
    c.replicates = doc.value("replicates", c.replicates);
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      c.grid.count = g.value("K", c.grid.count);
      c.grid.ratio = g.value("epsilon", c.grid.ratio);
    }
    c.num_designs = doc.value("num_designs", c.num_designs);
    c.mc_cstar = doc.value("mc_cstar", c.mc_cstar);
    c.output_dir = doc.value("output_dir", c.output_dir);
    c.threads = doc.value("threads", c.threads);
    c.sign_zero_tol = doc.value("sign_zero_tol", c.sign_zero_tol);
    c.verdict_margin = doc.value("verdict_margin", c.verdict_margin);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json losses = nlohmann::json::array();
  for (Loss l : c.losses) losses.push_back(std::string(to_string(l)));
  return {{"seed", c.seed},
          {"p", c.p},
          {"q", c.q},
          {"sigma", c.sigma},
          {"profile", std::string(to_string(c.profile.kind))},
          {"family", std::string(to_string(c.family))},
          {"losses", losses},
          {"n_list", c.n_list},
          {"replicates", c.replicates},
          {"grid", {{"K", c.grid.count}, {"epsilon", c.grid.ratio}}},
          {"num_designs", c.num_designs},
          {"mc_cstar", c.mc_cstar},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"sign_zero_tol", c.sign_zero_tol},
          {"verdict_margin", c.verdict_margin}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) failed_at = i, failure = std::current_exception();
        stop = true;
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

VectorXd sample_direction(int p, int q, Rng& rng, int* attempts) {
  if (q < 1 || q > p) throw ConfigError("sample_direction: need 1 <= q <= p");
  VectorXd nu = VectorXd::Zero(p);
  for (int k = 1; k <= 10000; ++k) {
    VectorXd z(q);
    for (int j = 0; j < q; ++j) z(j) = rng.normal();
    const double norm = z.norm();
    if (!(norm > 0.0)) continue;
    z /= norm;
    const auto mag = z.cwiseAbs();
    if (mag.minCoeff() > 0.0 && mag.maxCoeff() <= 5.0 * mag.minCoeff()) {
      nu.head(q) = z;
      if (attempts) *attempts = k;
      return nu;
    }
  }
  throw NumericalError("sample_direction: rejection bound of 1e4 attempts exceeded");
}

MatrixXd sample_correlation(int p, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    MatrixXd G(p, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < p; ++i) G(i, j) = rng.normal();
    const MatrixXd S = G * G.transpose();
    const VectorXd d = S.diagonal().cwiseSqrt().cwiseInverse();
    MatrixXd R = d.asDiagonal() * S * d.asDiagonal();
    R = (0.5 * (R + R.transpose())).eval();
    R.diagonal().setOnes();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(R, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() > 1e-10 * eig.eigenvalues().maxCoeff()) return R;
  }
  throw NumericalError("sample_correlation: Wishart draws kept coming out singular");
}

Design sample_design(const ExperimentConfig& cfg, Rng& rng) {
  Design d;
  d.p = cfg.p;
  d.q = cfg.q;
  d.sigma = cfg.sigma;
  d.profile = cfg.profile;
  d.nu = sample_direction(cfg.p, cfg.q, rng);
  MatrixXd R = sample_correlation(cfg.p, rng);
  const double spread = d.nu.dot(R * d.nu);
  if (cfg.family == Family::Gaussian) {
    d.dist = PredictorDistribution::gaussian(VectorXd::Zero(cfg.p), R * (cfg.sigma * cfg.sigma / spread));
  } else {
    const double chi = rng.normal();
    VectorXd w(cfg.p);
    for (int j = 0; j < cfg.p; ++j) w(j) = rng.normal();
    const VectorXd mu = 0.8 * cfg.sigma * (std::abs(chi) * d.nu + w);
    d.dist = PredictorDistribution::symmetric_mixture(mu, R * (0.36 * cfg.sigma * cfg.sigma / spread));
  }
  validate(d);
  return d;
}

std::uint64_t design_seed(const ExperimentConfig& cfg, std::uint64_t index) {
  return derive_seed(cfg.seed, {kDesignTag, index});
}

std::string design_id(std::uint64_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "d%04llu", static_cast<unsigned long long>(index));
  return buf;
}

GiReport DesignAnalysis::report(double margin) const {
  GiReport r;
  r.design_id = id;
  r.margin = margin;
  if (auto it = per_loss.find(Loss::Logistic); it != per_loss.end()) r.eta_logistic = it->second.eta;
  if (auto it = per_loss.find(Loss::Hinge); it != per_loss.end()) r.eta_svm = it->second.eta;
  r.eta_second_moment = eta_second_moment;
  return r;
}

DesignAnalysis analyze_design(const ExperimentConfig& cfg, const Design& design, std::uint64_t index) {
  DesignAnalysis out;
  out.id = design_id(index);
  out.index = index;
  out.design = design;
  const ActivePartition part = partition_from_beta(design.nu, 0.0);
  for (Loss loss : cfg.losses) {
    Rng rng(derive_seed(design_seed(cfg, index), {kCstarTag, static_cast<std::uint64_t>(loss)}));
    LossAnalysis la;
    la.theta = fit_cstar(design, loss, cfg.mc_cstar, rng);
    la.hessian = risk_hessian(design, la.theta);
    la.partition = part;
    la.eta = gi_index(la.hessian, part);
    out.per_loss.emplace(loss, std::move(la));
  }
  if (design.dist.zero_mean()) out.eta_second_moment = gi_index_second_moment(design.dist, part);
  return out;
}

Dataset sample_dataset(const Design& design, Eigen::Index n, Rng& rng) {
  Dataset d;
  d.X = sample_predictors(design.dist, n, rng);
  d.y = sample_labels(design, d.X, rng);
  return d;
}

// ---------------------------------------------------------------------------
// Sign recovery
// ---------------------------------------------------------------------------

ExperimentRecord run_replicate(const ExperimentConfig& cfg, const SignRecoveryTask& task, int replicate) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.design_id = task.design_id;
  rec.loss = task.analysis->theta.loss;
  rec.eta = task.analysis->eta;
  rec.n = task.n;
  rec.replicate = replicate;

  Rng rng(derive_seed(cfg.seed, {kReplicateTag, task.design_index, static_cast<std::uint64_t>(task.n),
                                 static_cast<std::uint64_t>(replicate)}));
  const Dataset data = sample_dataset(*task.design, task.n, rng);
  const VectorXd target = sign_vector(task.analysis->theta.beta);

  // Walks the grid and stops at the first (largest) sign-correct lambda;
  // the answer is the same as scanning the full path.
  try {
    double lmax = rec.loss == Loss::Logistic ? lambda_max_logistic(data) : std::max(lambda_max_svm(data), 1e-12);
    PathPoint prev;
    bool have_prev = false;
    RegularizationPath single;
    for (double lambda : lambda_grid(lmax, cfg.grid)) {
      PathPoint pt = rec.loss == Loss::Logistic ? fit_l1_logistic(data, lambda, have_prev ? &prev : nullptr)
                                                : fit_l1_svm(data, lambda);
      single.points.assign(1, pt);
      if (path_contains_sign_correct(single, target, cfg.sign_zero_tol).found) {
        rec.found = true;
        rec.lambda_found = lambda;
        break;
      }
      prev = std::move(pt);
      have_prev = true;
    }
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = clean_message(e.what());
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

SignRecoveryResult summarize_replicates(std::vector<ExperimentRecord> records) {
  if (records.empty()) throw ConfigError("sign recovery: replicates must be positive (proportion undefined)");
  SignRecoveryResult res;
  int found = 0;
  for (const auto& r : records) {
    if (r.failed)
      ++res.failures;
    else if (r.found)
      ++found;
  }
  const auto total = static_cast<double>(records.size());
  if (res.failures > 0.05 * total) {
    const auto first = std::find_if(records.begin(), records.end(), [](const auto& r) { return r.failed; });
    throw NumericalError("sign recovery: " + std::to_string(res.failures) + " of " + std::to_string(records.size()) +
                         " replicates failed; first: " + first->error);
  }
  res.proportion = found / (total - res.failures);
  res.records = std::move(records);
  return res;
}

SignRecoveryResult run_sign_recovery(const ExperimentConfig& cfg, const SignRecoveryTask& task) {
  if (cfg.replicates < 1) throw ConfigError("sign recovery: replicates must be positive (proportion undefined)");
  std::vector<ExperimentRecord> records(static_cast<std::size_t>(cfg.replicates));
  parallel_for(records.size(), cfg.threads,
               [&](std::size_t r) { records[r] = run_replicate(cfg, task, static_cast<int>(r)); });
  return summarize_replicates(std::move(records));
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

namespace {

struct DesignSlot {
  std::optional<DesignAnalysis> analysis;
  std::string error;
};

std::vector<DesignSlot> analyze_all(const ExperimentConfig& cfg) {
  std::vector<DesignSlot> slots(static_cast<std::size_t>(cfg.num_designs));
  parallel_for(slots.size(), cfg.threads, [&](std::size_t i) {
    try {
      Rng rng(design_seed(cfg, i));
      const Design d = sample_design(cfg, rng);
      slots[i].analysis = analyze_design(cfg, d, i);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      slots[i].error = clean_message(e.what());
    }
  });
  return slots;
}

}  // namespace

SweepResult run_eta_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  SweepResult out;
  auto slots = analyze_all(cfg);

  std::vector<SignRecoveryTask> tasks;
  struct Item {
    std::size_t task;
    int replicate;
  };
  std::vector<Item> items;
  for (const auto& slot : slots) {
    if (!slot.analysis) continue;
    for (Loss loss : cfg.losses)
      for (int n : cfg.n_list) {
        tasks.push_back({&slot.analysis->design, &slot.analysis->per_loss.at(loss), slot.analysis->id,
                         slot.analysis->index, n});
        for (int r = 0; r < cfg.replicates; ++r) items.push_back({tasks.size() - 1, r});
      }
  }
  std::vector<ExperimentRecord> records(items.size());
  parallel_for(items.size(), cfg.threads, [&](std::size_t k) {
    records[k] = run_replicate(cfg, tasks[items[k].task], items[k].replicate);
  });

  std::size_t cursor = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    DesignRow row;
    row.id = design_id(i);
    row.report.design_id = row.id;
    row.report.margin = cfg.verdict_margin;
    if (!slots[i].analysis) {
      row.status = "failed: " + slots[i].error;
      ++out.failed_designs;
      out.rows.push_back(std::move(row));
      continue;
    }
    row.report = slots[i].analysis->report(cfg.verdict_margin);
    const std::size_t block = cfg.losses.size() * cfg.n_list.size() * static_cast<std::size_t>(cfg.replicates);
    const auto first = records.begin() + static_cast<std::ptrdiff_t>(cursor);
    out.records.insert(out.records.end(), first, first + static_cast<std::ptrdiff_t>(block));
    try {
      std::size_t offset = cursor;
      for (Loss loss : cfg.losses)
        for (int n : cfg.n_list) {
          std::vector<ExperimentRecord> chunk(records.begin() + static_cast<std::ptrdiff_t>(offset),
                                              records.begin() + static_cast<std::ptrdiff_t>(offset + cfg.replicates));
          row.proportion[loss][n] = summarize_replicates(std::move(chunk)).proportion;
          offset += static_cast<std::size_t>(cfg.replicates);
        }
      out.analyses.push_back(std::move(*slots[i].analysis));
    } catch (const NumericalError& e) {
      row.status = "failed: " + clean_message(e.what());
      row.proportion.clear();
      ++out.failed_designs;
    }
    cursor += block;
    out.rows.push_back(std::move(row));
  }
  return out;
}

CsvTable records_csv(const std::vector<ExperimentRecord>& records) {
  CsvTable t;
  t.header = {"design_id", "loss", "eta", "n", "replicate", "found", "lambda_found", "status"};
  for (const auto& r : records)
    t.rows.push_back({r.design_id, std::string(to_string(r.loss)), format_double(r.eta), std::to_string(r.n),
                      std::to_string(r.replicate), r.found ? "1" : "0",
                      r.lambda_found ? format_double(*r.lambda_found) : std::string(),
                      r.failed ? "failed: " + r.error : std::string("ok")});
  return t;
}

CsvTable summary_csv(const ExperimentConfig& cfg, const SweepResult& sweep) {
  CsvTable t;
  t.header = {"design_id", "status", "eta_logistic", "eta_svm", "eta_second_moment", "verdict_logistic", "verdict_svm"};
  for (Loss loss : cfg.losses)
    for (int n : cfg.n_list) t.header.push_back(prop_column(loss, n));
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  auto verdict = [&](const std::optional<double>& v) {
    return v ? std::string(to_string(classify(*v, cfg.verdict_margin))) : std::string();
  };
  for (const auto& row : sweep.rows) {
    std::vector<std::string> cells{row.id,
                                   row.status,
                                   cell(row.report.eta_logistic),
                                   cell(row.report.eta_svm),
                                   cell(row.report.eta_second_moment),
                                   verdict(row.report.eta_logistic),
                                   verdict(row.report.eta_svm)};
    for (Loss loss : cfg.losses)
      for (int n : cfg.n_list) {
        const auto it = row.proportion.find(loss);
        cells.push_back(it == row.proportion.end() ? std::string() : format_double(it->second.at(n)));
      }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::vector<ScatterSeries> sweep_scatter(const ExperimentConfig& cfg, const SweepResult& sweep) {
  const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
  std::vector<ScatterSeries> series;
  for (Loss loss : cfg.losses) {
    ScatterSeries s;
    s.label = std::string(to_string(loss)) + " n=" + std::to_string(n_max);
    for (const auto& row : sweep.rows) {
      const auto it = row.proportion.find(loss);
      if (it == row.proportion.end()) continue;
      const auto& eta = loss == Loss::Logistic ? row.report.eta_logistic : row.report.eta_svm;
      if (!eta) continue;
      s.xs.push_back(*eta);
      s.ys.push_back(it->second.at(n_max));
    }
    series.push_back(std::move(s));
  }
  return series;
}

void write_sweep(const ExperimentConfig& cfg, const SweepResult& sweep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  emit_csv(records_csv(sweep.records), dir / "records.csv");
  emit_csv(summary_csv(cfg, sweep), dir / "summary.csv");
  emit_svg_scatter(sweep_scatter(cfg, sweep), dir / "eta_scatter.svg", "Sign-correct paths against the GI index");
  for (const auto& a : sweep.analyses) {
    nlohmann::json doc = {{"id", a.id}, {"design", to_json(a.design)}};
    for (const auto& [loss, la] : a.per_loss) {
      doc["theta"][std::string(to_string(loss))] = to_json(la.theta);
      doc["eta"][std::string(to_string(loss))] = la.eta;
    }
    if (a.eta_second_moment) doc["eta"]["second_moment"] = *a.eta_second_moment;
    write_text(dir / ("design_" + a.id + ".json"), doc.dump(2) + "\n");
  }
}

ContingencyResult run_msc_contingency(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto has = [&](Loss l) { return std::find(cfg.losses.begin(), cfg.losses.end(), l) != cfg.losses.end(); };
  if (!has(Loss::Logistic) || !has(Loss::Hinge)) throw ConfigError("contingency: needs both losses");

  ContingencyResult out;
  auto slots = analyze_all(cfg);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    DesignRow row;
    row.id = design_id(i);
    if (!slots[i].analysis) {
      row.status = "failed: " + slots[i].error;
      ++out.table.failed;
      out.rows.push_back(std::move(row));
      continue;
    }
    row.report = slots[i].analysis->report(cfg.verdict_margin);
    const Verdict vl = classify(*row.report.eta_logistic, cfg.verdict_margin);
    const Verdict vs = classify(*row.report.eta_svm, cfg.verdict_margin);
    auto& t = out.table;
    if (vl == Verdict::Borderline || vs == Verdict::Borderline)
      ++t.borderline;
    else if (vl == Verdict::Consistent && vs == Verdict::Consistent)
      ++t.both;
    else if (vl == Verdict::Consistent)
      ++t.logistic_only;
    else if (vs == Verdict::Consistent)
      ++t.svm_only;
    else
      ++t.neither;
    out.rows.push_back(std::move(row));
  }
  return out;
}

CsvTable contingency_csv(const Contingency& t) {
  CsvTable out;
  out.header = {"cell", "count", "proportion"};
  const double total = t.classified();
  auto add = [&](const char* name, int count, bool in_table) {
    out.rows.push_back({name, std::to_string(count),
                        in_table && total > 0 ? format_double(count / total) : std::string()});
  };
  add("both_msc", t.both, true);
  add("logistic_only", t.logistic_only, true);
  add("svm_only", t.svm_only, true);
  add("neither", t.neither, true);
  add("borderline", t.borderline, false);
  add("failed", t.failed, false);
  return out;
}

// ---------------------------------------------------------------------------
// Limit law check
// ---------------------------------------------------------------------------

MatrixXd sample_covariance(const MatrixXd& draws) {
  if (draws.rows() < 2) throw DomainError("sample_covariance: need at least two draws");
  const MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
}

LimitCheckReport run_limit_check(const ExperimentConfig& cfg, const Design& design, const LossAnalysis& analysis,
                                 int n, int replicates, double lambda_scaled, int limit_count) {
  const Loss loss = analysis.theta.loss;
  if (loss == Loss::Hinge && lambda_scaled == 0.0)
    throw ConfigError("limit check: the unpenalized hinge fit is not supported");
  if (n < 1 || replicates < 2) throw ConfigError("limit check: need n >= 1 and at least two replicates");
  if (!(lambda_scaled >= 0.0)) throw ConfigError("limit check: lambda must be nonnegative");

  const double root_n = std::sqrt(static_cast<double>(n));
  const double lambda_n = lambda_scaled * root_n;
  const Eigen::Index dim = design.p + 1;
  VectorXd truth(dim);
  truth << analysis.theta.alpha, analysis.theta.beta;

  MatrixXd draws(replicates, dim);
  parallel_for(static_cast<std::size_t>(replicates), cfg.threads, [&](std::size_t r) {
    Rng rng(derive_seed(cfg.seed, {kLimitTag, static_cast<std::uint64_t>(n), r}));
    const Dataset data = sample_dataset(design, n, rng);
    const PathPoint fit = loss == Loss::Logistic ? fit_l1_logistic(data, lambda_n) : fit_l1_svm(data, lambda_n);
    VectorXd est(dim);
    est << fit.intercept, fit.coefficients;
    draws.row(static_cast<Eigen::Index>(r)) = (root_n * (est - truth)).transpose();
  });

  LimitCheckReport rep;
  rep.n = n;
  rep.replicates = replicates;
  rep.lambda_scaled = lambda_scaled;
  rep.empirical_cov = sample_covariance(draws);
  const MatrixXd& H = analysis.hessian;
  const MatrixXd J = score_covariance(design, analysis.theta);
  const MatrixXd Hinv = H.ldlt().solve(MatrixXd::Identity(dim, dim));
  rep.sandwich = Hinv * J * Hinv;
  if (lambda_scaled == 0.0) {
    rep.target_cov = rep.sandwich;
  } else {
    LimitProblem prob{H, J, lambda_scaled, analysis.partition};
    Rng rng(derive_seed(cfg.seed, {kLimitTag, 0xffffffffULL}));
    rep.target_cov = sample_covariance(sample_limit_distribution(prob, limit_count, rng));
  }
  rep.relative_error = (rep.empirical_cov - rep.target_cov).norm() / rep.target_cov.norm();
  return rep;
}

CsvTable limit_report_csv(const LimitCheckReport& rep) {
  CsvTable t;
  t.header = {"row", "col", "empirical", "target", "sandwich"};
  for (Eigen::Index i = 0; i < rep.empirical_cov.rows(); ++i)
    for (Eigen::Index j = 0; j < rep.empirical_cov.cols(); ++j)
      t.rows.push_back({std::to_string(i), std::to_string(j), format_double(rep.empirical_cov(i, j)),
                        format_double(rep.target_cov(i, j)), format_double(rep.sandwich(i, j))});
  t.rows.push_back({"relative_frobenius", "", format_double(rep.relative_error), "", ""});
  return t;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

OracleFit oracle_grid_fit(const Dataset& data, Loss loss, double lambda, double box, double step) {
  const Eigen::Index n = data.n(), p = data.p(), dim = p + 1;
  if (p > 3) throw ConfigError("oracle_grid_fit: refused for p > 3");
  if (!(box > 0.0) || !(step > 0.0) || step > box) throw DomainError("oracle_grid_fit: need 0 < step <= box");

  auto objective = [&](const VectorXd& t) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = t(0);
      for (Eigen::Index j = 0; j < p; ++j) s += data.X(i, j) * t(j + 1);
      total += loss_eval(loss, data.y(i), s);
    }
    return total + lambda * t.tail(p).lpNorm<1>();
  };

  const int per_axis = static_cast<int>(std::floor(2.0 * box / step + 1e-9)) + 1;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  VectorXd t(dim), best(dim);
  double f_best = INFINITY;
  for (;;) {
    for (Eigen::Index k = 0; k < dim; ++k) t(k) = -box + step * idx[static_cast<std::size_t>(k)];
    const double f = objective(t);
    if (f < f_best) f_best = f, best = t;
    Eigen::Index k = 0;
    while (k < dim && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == dim) break;
  }

  // Coordinatewise golden section on a bracket that grows when the minimum
  // sits at its edge.
  constexpr double kInvPhi = 0.6180339887498949;
  for (int round = 0; round < 2000; ++round) {
    const double before = f_best;
    for (Eigen::Index k = 0; k < dim; ++k) {
      double h = step;
      for (int grow = 0; grow < 30; ++grow) {
        VectorXd probe = best;
        auto along = [&](double v) {
          probe(k) = v;
          return objective(probe);
        };
        double lo = best(k) - h, hi = best(k) + h;
        double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
        double f1 = along(x1), f2 = along(x2);
        while (hi - lo > 1e-12 * (1.0 + std::abs(best(k)))) {
          if (f1 <= f2) {
            hi = x2, x2 = x1, f2 = f1, x1 = hi - kInvPhi * (hi - lo), f1 = along(x1);
          } else {
            lo = x1, x1 = x2, f1 = f2, x2 = lo + kInvPhi * (hi - lo), f2 = along(x2);
          }
        }
        const double xm = 0.5 * (lo + hi), fm = along(xm);
        const bool at_edge = std::abs(xm - best(k)) > 0.999 * h;
        if (fm < f_best) f_best = fm, best(k) = xm;
        if (!at_edge) break;
        h *= 2.0;
      }
    }
    if (before - f_best <= 1e-14 * (1.0 + std::abs(f_best))) break;
  }

  if (loss == Loss::Hinge) {
    // Vertices of the arrangement {a + x_i^T b = y_i} and {b_j = 0}.
    const Eigen::Index planes = n + p;
    MatrixXd rows(planes, dim);
    VectorXd rhs(planes);
    for (Eigen::Index i = 0; i < n; ++i) {
      rows(i, 0) = 1.0;
      rows.row(i).tail(p) = data.X.row(i);
      rhs(i) = data.y(i);
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      rows.row(n + j).setZero();
      rows(n + j, j + 1) = 1.0;
      rhs(n + j) = 0.0;
    }
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) pick[static_cast<std::size_t>(k)] = k;
    MatrixXd M(dim, dim);
    VectorXd r(dim);
    while (planes >= dim) {
      for (Eigen::Index k = 0; k < dim; ++k) {
        M.row(k) = rows.row(pick[static_cast<std::size_t>(k)]);
        r(k) = rhs(pick[static_cast<std::size_t>(k)]);
      }
      Eigen::FullPivLU<MatrixXd> lu(M);
      if (lu.isInvertible() && lu.rcond() > 1e-12) {
        const VectorXd v = lu.solve(r);
        const double f = objective(v);
        if (f < f_best) f_best = f, best = v;
      }
      // next combination
      Eigen::Index k = dim - 1;
      while (k >= 0 && pick[static_cast<std::size_t>(k)] == planes - dim + k) --k;
      if (k < 0) break;
      ++pick[static_cast<std::size_t>(k)];
      for (Eigen::Index m = k + 1; m < dim; ++m) pick[static_cast<std::size_t>(m)] = pick[static_cast<std::size_t>(m - 1)] + 1;
    }
  }

  OracleFit out;
  out.objective = f_best;
  out.intercept = best(0);
  out.coefficients = best.tail(p);
  return out;
}

}  // namespace l1gi
