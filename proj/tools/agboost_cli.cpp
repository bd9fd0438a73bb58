// agboost command-line tool: dataset generation, benchmarking, grid search,
// and one-off train/predict runs.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agboost/agboost.hpp"

namespace fs = std::filesystem;
using namespace agboost;

namespace {

struct InputOptions {
  std::string source;  // CSV path or synthetic dataset name
  std::string target = "y";
  std::optional<std::size_t> target_index;
  bool no_header = false;
  std::string delimiter = ",";
  std::size_t n = 100;
};

struct ModelOptions {
  std::string base_learner = "cart";
  std::size_t iterations = 200;
  std::size_t min_samples_leaf = 10;
  double shrinkage = 1.0;
  double epsilon = 1.0;
  double delta = 1.0;
  std::string softmax_sign = "negated";
  bool standardize = false;
  std::uint64_t seed = 1;
};

char parse_delimiter(const std::string& d) {
  if (d == "whitespace" || d == " ") return ' ';
  if (d == "tab" || d == "\\t") return '\t';
  if (d.size() == 1) return d[0];
  throw ConfigError("unsupported delimiter '" + d + "'");
}

void add_input_options(CLI::App* cmd, InputOptions& in, const std::string& flag, const std::string& help) {
  cmd->add_option(flag, in.source, help)->required();
  cmd->add_option("--target", in.target, "Target column name (CSV input)");
  cmd->add_option("--target-index", in.target_index, "Zero-based target column index (overrides --target)");
  cmd->add_flag("--no-header", in.no_header, "CSV input has no header row");
  cmd->add_option("--delimiter", in.delimiter, "CSV delimiter: a character, 'tab' or 'whitespace'");
  cmd->add_option("--n", in.n, "Instance count for synthetic input")->check(CLI::PositiveNumber);
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--base-learner", m.base_learner, "cart or ert")->check(CLI::IsMember({"cart", "ert"}));
  cmd->add_option("--iterations", m.iterations, "Boosting iterations T");
  cmd->add_option("--min-samples-leaf", m.min_samples_leaf, "Minimum training instances per leaf")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--shrinkage", m.shrinkage, "Shrinkage in (0, 1]");
  cmd->add_option("--epsilon", m.epsilon, "Contamination rate in [0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--delta", m.delta, "Discount factor in [0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--softmax-sign", m.softmax_sign, "negated or literal")
      ->check(CLI::IsMember({"negated", "literal"}));
  cmd->add_flag("--standardize", m.standardize, "z-score features before measuring attention distances");
  cmd->add_option("--seed", m.seed, "Seed for synthetic data and randomized splits");
}

DataMatrix load_input(const InputOptions& in, std::uint64_t seed) {
  if (is_synthetic(in.source) && !fs::exists(in.source)) return make_synthetic(in.source, in.n, std::nullopt, RngSeed{seed});
  CsvOptions csv;
  csv.has_header = !in.no_header;
  csv.delimiter = parse_delimiter(in.delimiter);
  const ColumnRef target = in.target_index ? ColumnRef(*in.target_index) : ColumnRef(in.target);
  return load_csv(in.source, target, csv);
}

struct FittedModels {
  std::shared_ptr<const GBMModel> gbm;
  DistanceScale scale;
  AttentionConfig attention;
  std::optional<AttentionModel> agboost;
};

FittedModels fit_models(const DataMatrix& train, const ModelOptions& m) {
  GBMConfig config;
  config.iterations = m.iterations;
  config.shrinkage = m.shrinkage;
  config.tree_config.min_samples_leaf = m.min_samples_leaf;
  config.tree_config.split_mode = parse_base_learner(m.base_learner) == BaseLearner::Cart ? SplitMode::Exact
                                                                                          : SplitMode::ExtraRandom;
  config.tree_config.seed = RngSeed{m.seed}.derive(1);
  if (!(m.shrinkage > 0.0 && m.shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");

  FittedModels out;
  out.gbm = std::make_shared<const GBMModel>(fit_gbm(train, config));
  out.attention.softmax_sign = m.softmax_sign == "literal" ? SoftmaxSign::Literal : SoftmaxSign::Negated;
  out.attention.standardize = m.standardize;
  out.scale = make_distance_scale(train, m.standardize);
  const auto stats = compute_leaf_statistics(*out.gbm, train.features(), out.scale);
  out.agboost.emplace(fit_attention(out.gbm, stats, train.targets(), m.epsilon, m.delta, out.attention, out.scale));
  return out;
}

Eigen::VectorXd predict_all(const FittedModels& f, ModelKind kind, const DataMatrix& data) {
  Eigen::VectorXd pred(static_cast<Eigen::Index>(data.n()));
  if (kind == ModelKind::Gbm) {
    for (std::size_t i = 0; i < data.n(); ++i) pred[static_cast<Eigen::Index>(i)] = f.gbm->predict(data.row(i));
    return pred;
  }
  const auto stats = compute_leaf_statistics(*f.gbm, data.features(), f.scale);
  if (kind == ModelKind::AGBoost) return f.agboost->predict(stats);
  return make_nonparametric(f.gbm, f.agboost->epsilon(), f.agboost->delta(), f.attention, f.scale).predict(stats);
}

nlohmann::json metrics_json(const FittedModels& f, const DataMatrix& data) {
  nlohmann::json j;
  const std::span<const double> y(data.targets().data(), data.n());
  for (const auto kind : {ModelKind::Gbm, ModelKind::NonParam, ModelKind::AGBoost}) {
    const auto pred = predict_all(f, kind, data);
    const std::span<const double> p(pred.data(), data.n());
    nlohmann::json entry{{"mae", mae(y, p)}};
    try {
      entry["r2"] = r2(y, p);
    } catch (const DegenerateError&) {
      entry["r2"] = nullptr;
    }
    j[to_string(kind)] = entry;
  }
  return j;
}

fs::path output_dir(const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("AGBOOST_OUT_DIR"); env && *env) return env;
  return ".";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-based gradient boosting: data generation, benchmarks and model fitting"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // generate
  std::string gen_name;
  std::size_t gen_n = 100;
  std::optional<double> gen_noise;
  std::string gen_noise_kind = "absolute";
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  generate->add_option("dataset", gen_name, "friedman1, friedman2, friedman3, regression or sparse")
      ->required()
      ->check(CLI::IsMember(synthetic_dataset_names()));
  generate->add_option("--n", gen_n, "Number of instances")->check(CLI::PositiveNumber);
  generate->add_option("--noise", gen_noise, "Noise level (default: the dataset's default)");
  generate->add_option("--noise-kind", gen_noise_kind, "absolute sd, or relative to the signal sd")
      ->check(CLI::IsMember({"absolute", "relative"}));
  generate->add_option("--seed", gen_seed, "Random seed");
  generate->add_option("--out", gen_out, "Output CSV path")->required();

  // benchmark
  std::string bench_config;
  std::optional<std::string> bench_out;
  std::optional<std::size_t> bench_reps;
  std::optional<std::size_t> bench_threads;
  bool bench_quiet = false;
  auto* benchmark = app.add_subcommand("benchmark", "Run the repeated hold-out protocol from a config file");
  benchmark->add_option("--config", bench_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  benchmark->add_option("--out-dir", bench_out, "Report directory (default: $AGBOOST_OUT_DIR or .)");
  benchmark->add_option("--repetitions", bench_reps, "Override the configured repetition count")
      ->check(CLI::PositiveNumber);
  benchmark->add_option("--threads", bench_threads, "Worker threads (0: all cores)");
  benchmark->add_flag("--quiet", bench_quiet, "Suppress progress output");

  // gridsearch
  std::string grid_dataset;
  std::string grid_learner = "cart";
  std::optional<std::string> grid_config;
  std::optional<std::string> grid_manifest;
  std::optional<std::size_t> grid_reps;
  std::optional<std::uint64_t> grid_seed;
  std::vector<double> grid_eps;
  std::vector<double> grid_delta;
  std::optional<std::string> grid_out;
  auto* gridsearch = app.add_subcommand("gridsearch", "Mean AGBoost R^2 over the (epsilon, delta) grid as CSV");
  gridsearch->add_option("--dataset", grid_dataset, "Synthetic name or manifest entry")->required();
  gridsearch->add_option("--base-learner", grid_learner, "cart or ert")->check(CLI::IsMember({"cart", "ert"}));
  gridsearch->add_option("--config", grid_config, "Base experiment config (JSON)")->check(CLI::ExistingFile);
  gridsearch->add_option("--manifest", grid_manifest, "Dataset manifest (JSON)")->check(CLI::ExistingFile);
  gridsearch->add_option("--repetitions", grid_reps, "Repetitions")->check(CLI::PositiveNumber);
  gridsearch->add_option("--seed", grid_seed, "Base seed");
  gridsearch->add_option("--epsilon-grid", grid_eps, "Epsilon values")->delimiter(',');
  gridsearch->add_option("--delta-grid", grid_delta, "Delta values")->delimiter(',');
  gridsearch->add_option("--out", grid_out, "Output CSV (default: stdout)");

  // train
  InputOptions train_in;
  ModelOptions train_model;
  std::optional<std::string> train_test;
  std::optional<std::string> train_weights;
  std::optional<std::string> train_trees;
  auto* train = app.add_subcommand("train", "Fit GBM and AGBoost on one dataset and report metrics");
  add_input_options(train, train_in, "--data", "Training CSV or synthetic dataset name");
  add_model_options(train, train_model);
  train->add_option("--test", train_test, "CSV to score with the fitted models (same layout as --data)");
  train->add_option("--weights-out", train_weights, "Write the fitted attention weights w as CSV");
  train->add_option("--trees-out", train_trees, "Write a text dump of the fitted trees");

  // predict
  InputOptions pred_train;
  ModelOptions pred_model;
  std::string pred_data;
  std::string pred_out;
  std::string pred_kind = "agboost";
  auto* predict = app.add_subcommand("predict", "Fit on a training set, then predict and score another CSV");
  add_input_options(predict, pred_train, "--train", "Training CSV or synthetic dataset name");
  add_model_options(predict, pred_model);
  predict->add_option("--data", pred_data, "CSV to predict (must contain the target column)")->required();
  predict->add_option("--out", pred_out, "Output CSV of predictions")->required();
  predict->add_option("--model", pred_kind, "gbm, nonparam or agboost")
      ->check(CLI::IsMember({"gbm", "nonparam", "agboost"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      Noise noise = default_noise(gen_name);
      if (gen_noise) noise = gen_noise_kind == "relative" ? Noise::relative(*gen_noise) : Noise::absolute(*gen_noise);
      write_csv(gen_out, make_synthetic(gen_name, gen_n, noise, RngSeed{gen_seed}));
    } else if (*benchmark) {
      auto config = load_experiment_config(bench_config);
      if (bench_reps) config.repetitions = *bench_reps;
      if (bench_threads) config.threads = *bench_threads;
      const auto report = run_experiment(config, bench_quiet ? nullptr : &std::cerr);
      const fs::path dir = output_dir(bench_out);
      fs::create_directories(dir);
      emit_report(report, ReportFormat::Json, dir / "report.json");
      emit_report(report, ReportFormat::Markdown, dir / "report.md");
      emit_report(report, ReportFormat::Csv, dir / "report.csv");
      for (const auto& d : report.datasets) {
        if (!d.grid_r2.empty()) write_text(dir / ("grid_" + d.name + "_" + to_string(d.base_learner) + ".csv"), format_grid_csv(d));
      }
      std::cout << format_report(report, ReportFormat::Markdown);
    } else if (*gridsearch) {
      ExperimentConfig config = grid_config ? load_experiment_config(*grid_config) : ExperimentConfig{};
      config.datasets = {grid_dataset};
      config.base_learner = parse_base_learner(grid_learner);
      config.models = {ModelKind::AGBoost};
      if (grid_manifest) config.manifest = fs::path(*grid_manifest);
      if (grid_reps) config.repetitions = *grid_reps;
      if (grid_seed) config.seed = RngSeed{*grid_seed};
      if (!grid_eps.empty()) config.epsilon_grid = grid_eps;
      if (!grid_delta.empty()) config.delta_grid = grid_delta;
      const auto report = run_experiment(config, &std::cerr);
      const auto csv = format_grid_csv(report.datasets.front());
      if (grid_out) {
        write_text(*grid_out, csv);
      } else {
        std::cout << csv;
      }
    } else if (*train) {
      const auto data = load_input(train_in, train_model.seed);
      const auto fitted = fit_models(data, train_model);
      nlohmann::json j;
      j["h0"] = fitted.gbm->h0();
      j["iterations"] = fitted.gbm->iterations();
      j["epsilon"] = train_model.epsilon;
      j["delta"] = train_model.delta;
      j["degenerate"] = fitted.agboost->degenerate();
      j["train"] = metrics_json(fitted, data);
      if (train_test) {
        InputOptions test_in = train_in;
        test_in.source = *train_test;
        j["test"] = metrics_json(fitted, load_input(test_in, train_model.seed));
      }
      if (train_weights) {
        std::ostringstream w;
        w.precision(17);
        w << "t,w\n";
        const auto weights = fitted.agboost->w();
        for (std::size_t t = 0; t < weights.size(); ++t) w << t + 1 << ',' << weights[t] << '\n';
        write_text(*train_weights, w.str());
      }
      if (train_trees) {
        std::ostringstream dump;
        for (std::size_t t = 1; t <= fitted.gbm->iterations(); ++t) {
          dump << "# tree " << t << " rescale " << fitted.gbm->rescale_factor(t) << '\n';
          fitted.gbm->tree(t).write_text(dump);
        }
        write_text(*train_trees, dump.str());
      }
      std::cout << j.dump(2) << '\n';
    } else if (*predict) {
      const auto data = load_input(pred_train, pred_model.seed);
      const auto fitted = fit_models(data, pred_model);
      InputOptions score_in = pred_train;
      score_in.source = pred_data;
      const auto scored = load_input(score_in, pred_model.seed);
      const auto pred = predict_all(fitted, parse_model(pred_kind), scored);
      std::ostringstream out;
      out.precision(17);
      out << "y,prediction\n";
      for (std::size_t i = 0; i < scored.n(); ++i) out << scored.target(i) << ',' << pred[static_cast<Eigen::Index>(i)] << '\n';
      write_text(pred_out, out.str());
      const std::span<const double> y(scored.targets().data(), scored.n());
      const std::span<const double> p(pred.data(), scored.n());
      nlohmann::json j{{"model", pred_kind}, {"n", scored.n()}, {"mae", mae(y, p)}};
      try {
        j["r2"] = r2(y, p);
      } catch (const DegenerateError&) {
        j["r2"] = nullptr;
      }
      std::cout << j.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
