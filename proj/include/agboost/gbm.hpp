#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agboost/data.hpp"
#include "agboost/errors.hpp"
#include "agboost/tree.hpp"

namespace agboost {

struct GBMConfig {
  std::size_t iterations = 200;
  TreeConfig tree_config{};
  double shrinkage = 1.0;  // in (0, 1]
};

// Squared-loss gradient boosting model
//   g(x) = h0 + sum_t shrinkage * gamma_t * h_t(x).
class GBMModel {
 public:
  GBMModel(double h0, std::vector<DecisionTree> trees, std::vector<double> gammas, double shrinkage,
           std::size_t feature_count)
      : h0_(h0), trees_(std::move(trees)), gammas_(std::move(gammas)), shrinkage_(shrinkage),
        feature_count_(feature_count) {
    detail::require_same_size(trees_.size(), gammas_.size(), "GBMModel trees/gammas");
  }

  double h0() const { return h0_; }
  std::size_t iterations() const { return trees_.size(); }
  std::size_t feature_count() const { return feature_count_; }
  double shrinkage() const { return shrinkage_; }
  std::span<const DecisionTree> trees() const { return trees_; }
  std::span<const double> gammas() const { return gammas_; }

  // Iterations are 1-based, matching t = 1..T.
  const DecisionTree& tree(std::size_t t) const {
    check_iteration(t);
    return trees_[t - 1];
  }

  // Multiplier turning tree t's raw leaf value into its rescaled value
  // shrinkage * gamma_t * T, so that uniform weights 1/T reproduce g(x).
  double rescale_factor(std::size_t t) const {
    check_iteration(t);
    return shrinkage_ * gammas_[t - 1] * static_cast<double>(trees_.size());
  }

  double predict(std::span<const double> x) const {
    detail::require_same_size(x.size(), feature_count_, "predict_gbm input");
    double out = h0_;
    for (std::size_t t = 0; t < trees_.size(); ++t) out += shrinkage_ * gammas_[t] * trees_[t].predict(x);
    return out;
  }

  double rescaled_pred(std::size_t t, std::span<const double> x) const {
    return rescale_factor(t) * tree(t).predict(x);
  }

  void check_iteration(std::size_t t) const {
    if (t < 1 || t > trees_.size()) {
      throw ContractError("iteration index " + std::to_string(t) + " outside 1.." + std::to_string(trees_.size()));
    }
  }

 private:
  double h0_;
  std::vector<DecisionTree> trees_;
  std::vector<double> gammas_;
  double shrinkage_;
  std::size_t feature_count_;
};

// Closed-form minimiser of sum (r_i - gamma h_i)^2; zero when h vanishes.
inline double line_search_gamma(std::span<const double> residuals, std::span<const double> tree_preds) {
  detail::require_same_size(residuals.size(), tree_preds.size(), "line_search_gamma");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    num += residuals[i] * tree_preds[i];
    den += tree_preds[i] * tree_preds[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

inline GBMModel fit_gbm(const DataMatrix& train, const GBMConfig& config) {
  if (!(config.shrinkage > 0.0 && config.shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
  if (train.n() < config.tree_config.min_samples_leaf) {
    throw FitError("fit_gbm: " + std::to_string(train.n()) + " instances is fewer than min_samples_leaf = " +
                   std::to_string(config.tree_config.min_samples_leaf));
  }
  const std::size_t n = train.n();
  const double h0 = train.targets().mean();

  std::vector<double> current(n, h0);
  std::vector<double> residuals(n);
  std::vector<double> preds(n);
  std::vector<DecisionTree> trees;
  std::vector<double> gammas;
  trees.reserve(config.iterations);
  gammas.reserve(config.iterations);

  for (std::size_t t = 0; t < config.iterations; ++t) {
    for (std::size_t i = 0; i < n; ++i) residuals[i] = train.target(i) - current[i];

    TreeConfig tree_config = config.tree_config;
    tree_config.seed = config.tree_config.seed.derive(t);
    auto tree = fit_tree(train.features(), residuals, tree_config);

    for (std::size_t i = 0; i < n; ++i) preds[i] = tree.predict(train.row(i));
    const double gamma = line_search_gamma(residuals, preds);
    for (std::size_t i = 0; i < n; ++i) current[i] += config.shrinkage * gamma * preds[i];

    trees.push_back(std::move(tree));
    gammas.push_back(gamma);
  }
  return {h0, std::move(trees), std::move(gammas), config.shrinkage, train.m()};
}

}  // namespace agboost
