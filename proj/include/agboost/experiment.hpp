#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agboost/attention.hpp"
#include "agboost/data.hpp"
#include "agboost/errors.hpp"
#include "agboost/gbm.hpp"
#include "agboost/metrics.hpp"

namespace agboost {

enum class BaseLearner { Cart, Ert };
enum class ModelKind { Gbm, NonParam, AGBoost };

inline std::string to_string(BaseLearner b) { return b == BaseLearner::Cart ? "cart" : "ert"; }

inline BaseLearner parse_base_learner(const std::string& s) {
  if (s == "cart") return BaseLearner::Cart;
  if (s == "ert") return BaseLearner::Ert;
  throw ConfigError("unknown base learner '" + s + "' (expected cart or ert)");
}

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Gbm: return "gbm";
    case ModelKind::NonParam: return "nonparam";
    case ModelKind::AGBoost: return "agboost";
  }
  return "?";
}

inline ModelKind parse_model(const std::string& s) {
  if (s == "gbm") return ModelKind::Gbm;
  if (s == "nonparam") return ModelKind::NonParam;
  if (s == "agboost") return ModelKind::AGBoost;
  throw ConfigError("unknown model '" + s + "' (expected gbm, nonparam or agboost)");
}

// ---------------------------------------------------------------------------
// Dataset registry

inline const std::vector<std::string>& synthetic_dataset_names() {
  static const std::vector<std::string> names{"friedman1", "friedman2", "friedman3", "regression", "sparse"};
  return names;
}

inline bool is_synthetic(const std::string& name) {
  const auto& names = synthetic_dataset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// Generator defaults: Friedman 1 absolute sd 1; Friedman 2/3 one third of the
// signal sd; Regression noiseless (10 informative of 100 features); Sparse unit sd.
inline Noise default_noise(const std::string& name) {
  if (name == "friedman1") return Noise::absolute(1.0);
  if (name == "friedman2" || name == "friedman3") return Noise::relative(1.0 / 3.0);
  if (name == "regression") return Noise::none();
  if (name == "sparse") return Noise::absolute(1.0);
  throw ConfigError("unknown synthetic dataset '" + name + "'");
}

inline DataMatrix make_synthetic(const std::string& name, std::size_t n, std::optional<Noise> noise, RngSeed seed) {
  const Noise level = noise.value_or(default_noise(name));
  if (name == "friedman1") return gen_friedman1(n, level, seed);
  if (name == "friedman2") return gen_friedman2(n, level, seed);
  if (name == "friedman3") return gen_friedman3(n, level, seed);
  if (name == "regression") return gen_regression(n, 100, 10, level, seed);
  if (name == "sparse") return gen_sparse_uncorrelated(n, level, seed);
  throw ConfigError("unknown synthetic dataset '" + name + "'");
}

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;  // resolved against the manifest's directory
  ColumnRef target_column;
  CsvOptions csv;
};

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open dataset manifest: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed dataset manifest " + file.string() + ": " + e.what());
  }
  std::vector<ManifestEntry> out;
  for (const auto& d : j.at("datasets")) {
    ManifestEntry e;
    e.name = d.at("name").get<std::string>();
    e.path = file.parent_path() / d.at("path").get<std::string>();
    const auto& target = d.at("target_column");
    if (target.is_number_integer()) {
      e.target_column = target.get<std::size_t>();
    } else {
      e.target_column = target.get<std::string>();
    }
    e.csv.has_header = d.value("has_header", true);
    const auto delim = d.value("delimiter", std::string(","));
    if (delim == "whitespace" || delim == " ") {
      e.csv.delimiter = ' ';
    } else if (delim == "\\t" || delim == "tab") {
      e.csv.delimiter = '\t';
    } else if (delim.size() == 1) {
      e.csv.delimiter = delim[0];
    } else {
      throw ConfigError("unsupported delimiter '" + delim + "' for dataset " + e.name);
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::vector<std::string> datasets;
  std::optional<std::filesystem::path> manifest;
  std::size_t synthetic_n = 100;
  std::map<std::string, Noise> noise;  // overrides for synthetic generators
  BaseLearner base_learner = BaseLearner::Cart;
  std::size_t iterations = 200;
  std::size_t min_samples_leaf = 10;
  double shrinkage = 1.0;
  std::size_t repetitions = 100;
  std::vector<double> epsilon_grid = default_epsilon_grid();
  std::vector<double> delta_grid{0.01, 0.1, 0.5, 0.9, 1.0};
  RngSeed seed{1};
  std::vector<ModelKind> models{ModelKind::Gbm, ModelKind::NonParam, ModelKind::AGBoost};
  AttentionConfig attention{};
  std::size_t threads = 0;  // 0: hardware concurrency

  static std::vector<double> default_epsilon_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 9; ++k) g.push_back(k / 9.0);
    return g;
  }

  bool has(ModelKind m) const { return std::find(models.begin(), models.end(), m) != models.end(); }
  bool needs_grid() const { return has(ModelKind::NonParam) || has(ModelKind::AGBoost); }

  void validate() const {
    if (datasets.empty()) throw ConfigError("no datasets configured");
    if (models.empty()) throw ConfigError("model set is empty");
    if (repetitions == 0) throw ConfigError("repetitions must be >= 1");
    if (min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
    if (needs_grid()) {
      if (epsilon_grid.empty() || delta_grid.empty()) throw ConfigError("epsilon and delta grids must be nonempty");
      for (double e : epsilon_grid) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon grid values must lie in [0, 1]");
      }
      for (double d : delta_grid) {
        if (!(d > 0.0 && d <= 1.0)) throw ConfigError("delta grid values must lie in (0, 1]");
      }
    }
    attention.solver.validate();
  }
};

inline Noise parse_noise(const nlohmann::json& j) {
  if (j.is_number()) return Noise::absolute(j.get<double>());
  const auto kind = j.value("kind", std::string("absolute"));
  const double value = j.at("value").get<double>();
  if (kind == "absolute") return Noise::absolute(value);
  if (kind == "relative") return Noise::relative(value);
  throw ConfigError("noise kind must be 'absolute' or 'relative'");
}

// Reads an ExperimentConfig from JSON. Unknown keys are rejected so typos do
// not silently fall back to defaults.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  static const std::vector<std::string> known{
      "datasets", "dataset", "manifest", "synthetic_n", "noise", "base_learner", "iterations", "min_samples_leaf",
      "shrinkage", "repetitions", "epsilon_grid", "delta_grid", "seed", "models", "attention", "solver", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("datasets")) c.datasets = j.at("datasets").get<std::vector<std::string>>();
    if (j.contains("dataset")) c.datasets.push_back(j.at("dataset").get<std::string>());
    if (j.contains("manifest")) c.manifest = base_dir / j.at("manifest").get<std::string>();
    c.synthetic_n = j.value("synthetic_n", c.synthetic_n);
    if (j.contains("noise")) {
      for (const auto& [name, v] : j.at("noise").items()) c.noise[name] = parse_noise(v);
    }
    if (j.contains("base_learner")) c.base_learner = parse_base_learner(j.at("base_learner").get<std::string>());
    c.iterations = j.value("iterations", c.iterations);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.shrinkage = j.value("shrinkage", c.shrinkage);
    c.repetitions = j.value("repetitions", c.repetitions);
    if (j.contains("epsilon_grid")) c.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
    if (j.contains("delta_grid")) c.delta_grid = j.at("delta_grid").get<std::vector<double>>();
    if (j.contains("seed")) c.seed = RngSeed{j.at("seed").get<std::uint64_t>()};
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(parse_model(m.get<std::string>()));
    }
    if (j.contains("attention")) {
      const auto& a = j.at("attention");
      c.attention.standardize = a.value("standardize", false);
      const auto sign = a.value("softmax_sign", std::string("negated"));
      if (sign == "negated") {
        c.attention.softmax_sign = SoftmaxSign::Negated;
      } else if (sign == "literal") {
        c.attention.softmax_sign = SoftmaxSign::Literal;
      } else {
        throw ConfigError("softmax_sign must be 'negated' or 'literal'");
      }
    }
    if (j.contains("solver")) {
      c.attention.solver.tol = j.at("solver").value("tol", c.attention.solver.tol);
      c.attention.solver.max_iter = j.at("solver").value("max_iter", c.attention.solver.max_iter);
    }
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config file " + file.string() + ": " + e.what());
  }
  return parse_experiment_config(j, file.parent_path());
}

inline DataMatrix resolve_dataset(const std::string& name, const ExperimentConfig& config) {
  if (is_synthetic(name)) {
    const auto it = config.noise.find(name);
    return make_synthetic(name, config.synthetic_n,
                          it == config.noise.end() ? std::nullopt : std::optional<Noise>(it->second), config.seed);
  }
  if (!config.manifest) throw DataError("dataset '" + name + "' is not synthetic and no manifest is configured");
  for (const auto& entry : load_manifest(*config.manifest)) {
    if (entry.name == name) return load_csv(entry.path, entry.target_column, entry.csv);
  }
  throw DataError("dataset '" + name + "' not found in manifest " + config.manifest->string());
}

// ---------------------------------------------------------------------------
// Reports

struct ModelMetrics {
  double r2 = 0.0;
  double mae = 0.0;
  friend bool operator==(const ModelMetrics&, const ModelMetrics&) = default;
};

struct DatasetReport {
  std::string name;
  BaseLearner base_learner = BaseLearner::Cart;
  std::size_t repetitions = 0;
  std::optional<double> epsilon_opt;
  std::optional<double> delta_opt;
  std::map<std::string, ModelMetrics> models;  // keyed by model name
  // Mean test R^2 of the selection model, [epsilon index][delta index].
  std::vector<std::vector<double>> grid_r2;
  std::vector<double> epsilon_grid;
  std::vector<double> delta_grid;

  friend bool operator==(const DatasetReport&, const DatasetReport&) = default;
};

struct ComparisonTest {
  std::string metric;  // "r2"
  std::string model_a;
  std::string model_b;  // difference is a - b
  TTestResult result;

  friend bool operator==(const ComparisonTest& a, const ComparisonTest& b) {
    return a.metric == b.metric && a.model_a == b.model_a && a.model_b == b.model_b &&
           a.result.mean_diff == b.result.mean_diff && a.result.t_statistic == b.result.t_statistic &&
           a.result.p_value == b.result.p_value && a.result.ci_lower == b.result.ci_lower &&
           a.result.ci_upper == b.result.ci_upper && a.result.dof == b.result.dof;
  }
};

struct BenchmarkReport {
  std::vector<DatasetReport> datasets;
  std::vector<ComparisonTest> tests;

  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

// ---------------------------------------------------------------------------
// Protocol

namespace detail {

struct RepetitionResult {
  ModelMetrics gbm;
  // [epsilon index][delta index]
  std::vector<std::vector<ModelMetrics>> nonparam;
  std::vector<std::vector<ModelMetrics>> agboost;
  bool failed = false;
  std::string error;
};

inline ModelMetrics score(const Vector& y, const Eigen::VectorXd& pred) {
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
  const std::span<const double> ps(pred.data(), static_cast<std::size_t>(pred.size()));
  return {r2(ys, ps), mae(ys, ps)};
}

inline RepetitionResult run_repetition(const DataMatrix& data, const ExperimentConfig& config, std::size_t rep) {
  RepetitionResult out;
  const RngSeed rep_seed = config.seed.offset(rep);
  const auto parts = split(data.n(), rep_seed.derive(0));
  const auto train = data.subset(parts.train_idx);
  const auto test = data.subset(parts.test_idx);

  GBMConfig gbm_config;
  gbm_config.iterations = config.iterations;
  gbm_config.shrinkage = config.shrinkage;
  gbm_config.tree_config.min_samples_leaf = config.min_samples_leaf;
  gbm_config.tree_config.split_mode =
      config.base_learner == BaseLearner::Cart ? SplitMode::Exact : SplitMode::ExtraRandom;
  gbm_config.tree_config.seed = rep_seed.derive(1);
  const auto gbm = std::make_shared<const GBMModel>(fit_gbm(train, gbm_config));

  const auto scale = make_distance_scale(train, config.attention.standardize);
  const auto train_stats = compute_leaf_statistics(*gbm, train.features(), scale);
  const auto test_stats = compute_leaf_statistics(*gbm, test.features(), scale);

  Eigen::VectorXd gbm_pred(static_cast<Eigen::Index>(test.n()));
  for (std::size_t i = 0; i < test.n(); ++i) gbm_pred[static_cast<Eigen::Index>(i)] = gbm->predict(test.row(i));
  out.gbm = score(test.targets(), gbm_pred);
  if (!config.needs_grid()) return out;

  const std::size_t ne = config.epsilon_grid.size();
  const std::size_t nd = config.delta_grid.size();
  out.nonparam.assign(ne, std::vector<ModelMetrics>(nd));
  out.agboost.assign(ne, std::vector<ModelMetrics>(nd));
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t d = 0; d < nd; ++d) {
      const double eps = config.epsilon_grid[e];
      const double delta = config.delta_grid[d];
      if (config.has(ModelKind::NonParam)) {
        const auto np = make_nonparametric(gbm, eps, delta, config.attention, scale);
        out.nonparam[e][d] = score(test.targets(), np.predict(test_stats));
      }
      if (config.has(ModelKind::AGBoost)) {
        const auto ag = fit_attention(gbm, train_stats, train.targets(), eps, delta, config.attention, scale);
        out.agboost[e][d] = score(test.targets(), ag.predict(test_stats));
      }
    }
  }
  return out;
}

}  // namespace detail

// Runs the repeated hold-out protocol on one dataset: every repetition draws a
// 4:1 split, fits the GBM once, then fits attention at every (epsilon, delta)
// grid point. The reported grid point maximises mean AGBoost test R^2 (or the
// non-parametric R^2 when AGBoost is not requested).
inline DatasetReport run_dataset(const std::string& name, const DataMatrix& data, const ExperimentConfig& config,
                                 std::ostream* log = nullptr) {
  config.validate();
  const std::size_t reps = config.repetitions;
  std::vector<detail::RepetitionResult> results(reps);

  std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, reps);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t rep = next++; rep < reps; rep = next++) {
      try {
        results[rep] = detail::run_repetition(data, config, rep);
      } catch (const std::exception& e) {
        results[rep].failed = true;
        results[rep].error = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  std::size_t failures = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    if (!results[rep].failed) continue;
    ++failures;
    if (log) *log << "[" << name << "] repetition " << rep << " failed: " << results[rep].error << '\n';
  }
  if (failures) {
    throw FitError("dataset '" + name + "': " + std::to_string(failures) + " of " + std::to_string(reps) +
                   " repetitions failed (first: " +
                   std::find_if(results.begin(), results.end(), [](const auto& r) { return r.failed; })->error + ")");
  }

  DatasetReport report;
  report.name = name;
  report.base_learner = config.base_learner;
  report.repetitions = reps;
  const double inv = 1.0 / static_cast<double>(reps);

  if (config.has(ModelKind::Gbm)) {
    ModelMetrics m;
    for (const auto& r : results) {
      m.r2 += r.gbm.r2 * inv;
      m.mae += r.gbm.mae * inv;
    }
    report.models["gbm"] = m;
  }
  if (!config.needs_grid()) return report;

  const std::size_t ne = config.epsilon_grid.size();
  const std::size_t nd = config.delta_grid.size();
  const auto mean_at = [&](auto member, std::size_t e, std::size_t d) {
    ModelMetrics m;
    for (const auto& r : results) {
      m.r2 += (r.*member)[e][d].r2 * inv;
      m.mae += (r.*member)[e][d].mae * inv;
    }
    return m;
  };
  const auto selector = config.has(ModelKind::AGBoost) ? &detail::RepetitionResult::agboost
                                                       : &detail::RepetitionResult::nonparam;
  report.epsilon_grid = config.epsilon_grid;
  report.delta_grid = config.delta_grid;
  report.grid_r2.assign(ne, std::vector<double>(nd));
  std::size_t best_e = 0;
  std::size_t best_d = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t d = 0; d < nd; ++d) {
      report.grid_r2[e][d] = mean_at(selector, e, d).r2;
      if (report.grid_r2[e][d] > report.grid_r2[best_e][best_d]) {
        best_e = e;
        best_d = d;
      }
    }
  }
  report.epsilon_opt = config.epsilon_grid[best_e];
  report.delta_opt = config.delta_grid[best_d];
  if (config.has(ModelKind::NonParam)) report.models["nonparam"] = mean_at(&detail::RepetitionResult::nonparam, best_e, best_d);
  if (config.has(ModelKind::AGBoost)) report.models["agboost"] = mean_at(&detail::RepetitionResult::agboost, best_e, best_d);
  return report;
}

// Paired t-tests of AGBoost against the other models on mean R^2 across datasets.
inline std::vector<ComparisonTest> compare_models(const std::vector<DatasetReport>& datasets) {
  std::vector<ComparisonTest> tests;
  if (datasets.size() < 2) return tests;
  for (const std::string other : {"gbm", "nonparam"}) {
    std::vector<double> diffs;
    for (const auto& d : datasets) {
      const auto a = d.models.find("agboost");
      const auto b = d.models.find(other);
      if (a == d.models.end() || b == d.models.end()) {
        diffs.clear();
        break;
      }
      diffs.push_back(a->second.r2 - b->second.r2);
    }
    if (diffs.size() < 2) continue;
    try {
      tests.push_back({"r2", "agboost", other, paired_t_test(diffs)});
    } catch (const DegenerateError&) {
      // Identical differences on every dataset: no test to report.
    }
  }
  return tests;
}

inline BenchmarkReport run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  config.validate();
  BenchmarkReport report;
  for (const auto& name : config.datasets) {
    if (log) *log << "running " << name << " (" << to_string(config.base_learner) << ", " << config.repetitions
                  << " repetitions)\n";
    const auto data = resolve_dataset(name, config);
    report.datasets.push_back(run_dataset(name, data, config, log));
  }
  report.tests = compare_models(report.datasets);
  return report;
}

// ---------------------------------------------------------------------------
// Serialisation

inline nlohmann::json to_json(const BenchmarkReport& report) {
  nlohmann::json j;
  j["datasets"] = nlohmann::json::array();
  for (const auto& d : report.datasets) {
    nlohmann::json jd;
    jd["name"] = d.name;
    jd["base_learner"] = to_string(d.base_learner);
    jd["repetitions"] = d.repetitions;
    if (d.epsilon_opt) jd["epsilon_opt"] = *d.epsilon_opt;
    if (d.delta_opt) jd["delta_opt"] = *d.delta_opt;
    jd["models"] = nlohmann::json::object();
    for (const auto& [name, m] : d.models) jd["models"][name] = {{"r2", m.r2}, {"mae", m.mae}};
    if (!d.grid_r2.empty()) {
      jd["grid"] = {{"epsilon", d.epsilon_grid}, {"delta", d.delta_grid}, {"r2", d.grid_r2}};
    }
    j["datasets"].push_back(std::move(jd));
  }
  j["tests"] = nlohmann::json::array();
  for (const auto& t : report.tests) {
    j["tests"].push_back({{"metric", t.metric},
                          {"model_a", t.model_a},
                          {"model_b", t.model_b},
                          {"mean_diff", t.result.mean_diff},
                          {"t_statistic", t.result.t_statistic},
                          {"p_value", t.result.p_value},
                          {"ci95", {t.result.ci_lower, t.result.ci_upper}},
                          {"dof", t.result.dof}});
  }
  return j;
}

inline BenchmarkReport report_from_json(const nlohmann::json& j) {
  BenchmarkReport report;
  for (const auto& jd : j.at("datasets")) {
    DatasetReport d;
    d.name = jd.at("name").get<std::string>();
    d.base_learner = parse_base_learner(jd.at("base_learner").get<std::string>());
    d.repetitions = jd.at("repetitions").get<std::size_t>();
    if (jd.contains("epsilon_opt")) d.epsilon_opt = jd.at("epsilon_opt").get<double>();
    if (jd.contains("delta_opt")) d.delta_opt = jd.at("delta_opt").get<double>();
    for (const auto& [name, m] : jd.at("models").items()) d.models[name] = {m.at("r2").get<double>(), m.at("mae").get<double>()};
    if (jd.contains("grid")) {
      d.epsilon_grid = jd.at("grid").at("epsilon").get<std::vector<double>>();
      d.delta_grid = jd.at("grid").at("delta").get<std::vector<double>>();
      d.grid_r2 = jd.at("grid").at("r2").get<std::vector<std::vector<double>>>();
    }
    report.datasets.push_back(std::move(d));
  }
  for (const auto& jt : j.at("tests")) {
    ComparisonTest t;
    t.metric = jt.at("metric").get<std::string>();
    t.model_a = jt.at("model_a").get<std::string>();
    t.model_b = jt.at("model_b").get<std::string>();
    t.result.mean_diff = jt.at("mean_diff").get<double>();
    t.result.t_statistic = jt.at("t_statistic").get<double>();
    t.result.p_value = jt.at("p_value").get<double>();
    t.result.ci_lower = jt.at("ci95").at(0).get<double>();
    t.result.ci_upper = jt.at("ci95").at(1).get<double>();
    t.result.dof = jt.at("dof").get<std::size_t>();
    report.tests.push_back(std::move(t));
  }
  return report;
}

enum class ReportFormat { Json, Markdown, Csv };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + s + "'");
}

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string optional_cell(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "-"; }

inline std::string metric_cell(const DatasetReport& d, const std::string& model, bool want_r2) {
  const auto it = d.models.find(model);
  if (it == d.models.end()) return "-";
  return want_r2 ? fixed(it->second.r2, 3) : fixed(it->second.mae, 3);
}

inline void require_models(const BenchmarkReport& report) {
  for (const auto& d : report.datasets) {
    if (d.models.empty()) throw ConfigError("dataset '" + d.name + "' has no model results to report");
  }
}

}  // namespace detail

inline std::string format_report(const BenchmarkReport& report, ReportFormat format) {
  detail::require_models(report);
  static const std::vector<std::string> order{"gbm", "nonparam", "agboost"};
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Json:
      out << to_json(report).dump(2) << '\n';
      break;
    case ReportFormat::Markdown:
      out << "| Data set | eps_opt | delta_opt | R2 GBM | R2 Non-param | R2 AGBoost | MAE GBM | MAE Non-param | "
             "MAE AGBoost |\n";
      out << "|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& d : report.datasets) {
        out << "| " << d.name << " | " << detail::optional_cell(d.epsilon_opt, 3) << " | "
            << detail::optional_cell(d.delta_opt, 2);
        for (const auto& m : order) out << " | " << detail::metric_cell(d, m, true);
        for (const auto& m : order) out << " | " << detail::metric_cell(d, m, false);
        out << " |\n";
      }
      if (!report.tests.empty()) {
        out << '\n';
        for (const auto& t : report.tests) {
          out << "- " << t.model_a << " - " << t.model_b << " (" << t.metric
              << "): mean = " << detail::fixed(t.result.mean_diff, 4)
              << ", p = " << detail::fixed(t.result.p_value, 4) << ", 95% CI = ["
              << detail::fixed(t.result.ci_lower, 4) << ", " << detail::fixed(t.result.ci_upper, 4) << "]\n";
        }
      }
      break;
    case ReportFormat::Csv:
      out << "dataset,base_learner,repetitions,epsilon_opt,delta_opt,r2_gbm,r2_nonparam,r2_agboost,mae_gbm,"
             "mae_nonparam,mae_agboost\n";
      out << std::setprecision(17);
      for (const auto& d : report.datasets) {
        out << d.name << ',' << to_string(d.base_learner) << ',' << d.repetitions << ',';
        out << (d.epsilon_opt ? std::to_string(*d.epsilon_opt) : "") << ',';
        out << (d.delta_opt ? std::to_string(*d.delta_opt) : "");
        for (const auto& m : order) {
          const auto it = d.models.find(m);
          out << ',';
          if (it != d.models.end()) out << it->second.r2;
        }
        for (const auto& m : order) {
          const auto it = d.models.find(m);
          out << ',';
          if (it != d.models.end()) out << it->second.mae;
        }
        out << '\n';
      }
      break;
  }
  return out.str();
}

inline void emit_report(const BenchmarkReport& report, ReportFormat format, const std::filesystem::path& path) {
  const auto text = format_report(report, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << text;
  if (!out) throw DataError("failed writing report: " + path.string());
}

// Mean R^2 heat-map over the grid: one row per delta, one column per epsilon.
inline std::string format_grid_csv(const DatasetReport& d) {
  if (d.grid_r2.empty()) throw ConfigError("report for '" + d.name + "' has no grid results");
  std::ostringstream out;
  out << std::setprecision(17) << "delta";
  for (double e : d.epsilon_grid) out << ",eps=" << e;
  out << '\n';
  for (std::size_t k = 0; k < d.delta_grid.size(); ++k) {
    out << d.delta_grid[k];
    for (std::size_t e = 0; e < d.epsilon_grid.size(); ++e) out << ',' << d.grid_r2[e][k];
    out << '\n';
  }
  return out.str();
}

}  // namespace agboost
