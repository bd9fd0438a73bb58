#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "agboost/data.hpp"
#include "agboost/errors.hpp"
#include "agboost/gbm.hpp"
#include "agboost/simplex_qp.hpp"

namespace agboost {

// Sign of the distance inside the softmax. Negated gives nearer leaf keys the
// larger score (Gaussian-kernel semantics); Literal uses +distance.
enum class SoftmaxSign { Negated, Literal };

struct AttentionConfig {
  SoftmaxSign softmax_sign = SoftmaxSign::Negated;
  bool standardize = false;  // z-score features (training sd) before measuring distances
  SolverConfig solver{};
};

// Per-feature multipliers applied to x - A_t(x) before the squared norm.
// Empty means raw feature units.
using DistanceScale = std::vector<double>;

inline DistanceScale make_distance_scale(const DataMatrix& train, bool standardize) {
  if (!standardize) return {};
  DistanceScale scale(train.m(), 1.0);
  for (std::size_t j = 0; j < train.m(); ++j) {
    const auto col = train.features().col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(std::max<std::size_t>(train.n() - 1, 1));
    scale[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return scale;
}

inline double squared_distance(std::span<const double> x, std::span<const double> key, const DistanceScale& scale) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = (x[j] - key[j]) * (scale.empty() ? 1.0 : scale[j]);
    d += diff * diff;
  }
  return d;
}

// Numerically stable softmax of s_t = sign * delta^t * d_t / 2, t = 1..T.
inline std::vector<double> softmax_scores(std::span<const double> distances, double delta, SoftmaxSign sign) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ContractError("discount factor delta must lie in [0, 1]");
  const std::size_t T = distances.size();
  std::vector<double> out(T);
  if (T == 0) return out;
  const double direction = sign == SoftmaxSign::Negated ? -1.0 : 1.0;
  double discount = 1.0;
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < T; ++t) {
    discount *= delta;
    out[t] = direction * discount * distances[t] / 2.0;
    max_score = std::max(max_score, out[t]);
  }
  double total = 0.0;
  for (double& s : out) {
    s = std::exp(s - max_score);
    total += s;
  }
  for (double& s : out) s /= total;
  return out;
}

// B_t(x): mean rescaled prediction of tree t over the training instances that
// share x's leaf. This is the direct evaluation; LeafStatistics uses the
// equivalent leaf value.
inline double compute_B(const GBMModel& model, const DataMatrix& train, std::span<const double> x, std::size_t t) {
  const auto& tree = model.tree(t);
  const std::size_t leaf = tree.leaf_index(x);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < train.n(); ++j) {
    if (tree.leaf_index(train.row(j)) == leaf) {
      sum += model.rescaled_pred(t, train.row(j));
      ++count;
    }
  }
  // A leaf no training instance reaches can only come from a model fitted on
  // other data; fall back to the leaf's own value.
  return count ? sum / static_cast<double>(count) : model.rescaled_pred(t, x);
}

// Softmax attention scores D_t(x, delta^t) over the T iterations.
inline std::vector<double> compute_D(const GBMModel& model, std::span<const double> x, double delta,
                                     SoftmaxSign sign = SoftmaxSign::Negated, const DistanceScale& scale = {}) {
  detail::require_same_size(x.size(), model.feature_count(), "compute_D input");
  std::vector<double> distances(model.iterations());
  for (std::size_t t = 1; t <= model.iterations(); ++t) {
    distances[t - 1] = squared_distance(x, model.tree(t).leaf_key(x), scale);
  }
  return softmax_scores(distances, delta, sign);
}

// alpha_t = (1 - eps) D_t + eps w_t.
inline std::vector<double> attention_weights(std::span<const double> d_row, std::span<const double> w, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("contamination rate epsilon must lie in [0, 1]");
  detail::require_same_size(d_row.size(), w.size(), "attention_weights");
  require_simplex(d_row, "attention_weights (softmax row)");
  require_simplex(w, "attention_weights (w)");
  std::vector<double> alpha(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) alpha[t] = (1.0 - epsilon) * d_row[t] + epsilon * w[t];
  return alpha;
}

// Everything about a set of query points that does not depend on (epsilon,
// delta): squared distances to the leaf keys and leaf values B_t, n x T each.
struct LeafStatistics {
  Eigen::MatrixXd distance;
  Eigen::MatrixXd values;
};

inline LeafStatistics compute_leaf_statistics(const GBMModel& model, const Matrix& queries,
                                              const DistanceScale& scale = {}) {
  if (static_cast<std::size_t>(queries.cols()) != model.feature_count()) {
    throw DimensionError("query feature count does not match the model");
  }
  const Eigen::Index n = queries.rows();
  const auto T = static_cast<Eigen::Index>(model.iterations());
  LeafStatistics stats{Eigen::MatrixXd(n, T), Eigen::MatrixXd(n, T)};
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& tree = model.tree(static_cast<std::size_t>(t + 1));
    const double factor = model.rescale_factor(static_cast<std::size_t>(t + 1));
    for (Eigen::Index s = 0; s < n; ++s) {
      const std::span<const double> x(queries.row(s).data(), static_cast<std::size_t>(queries.cols()));
      const auto& leaf = tree.leaf(x);
      stats.distance(s, t) = squared_distance(x, leaf.key, scale);
      stats.values(s, t) = factor * leaf.value;
    }
  }
  return stats;
}

// D (softmax scores), B (leaf values) and h0 for every query row.
struct AttentionFeatures {
  Eigen::MatrixXd D;
  Eigen::MatrixXd B;
  Eigen::VectorXd h0_preds;
};

inline Eigen::MatrixXd softmax_matrix(const Eigen::MatrixXd& distance, double delta, SoftmaxSign sign) {
  Eigen::MatrixXd D(distance.rows(), distance.cols());
  std::vector<double> row(static_cast<std::size_t>(distance.cols()));
  for (Eigen::Index s = 0; s < distance.rows(); ++s) {
    for (Eigen::Index t = 0; t < distance.cols(); ++t) row[static_cast<std::size_t>(t)] = distance(s, t);
    const auto scores = softmax_scores(row, delta, sign);
    for (Eigen::Index t = 0; t < distance.cols(); ++t) D(s, t) = scores[static_cast<std::size_t>(t)];
  }
  return D;
}

inline AttentionFeatures compute_features(const GBMModel& model, const LeafStatistics& stats, double delta,
                                          SoftmaxSign sign = SoftmaxSign::Negated) {
  return {softmax_matrix(stats.distance, delta, sign), stats.values,
          Eigen::VectorXd::Constant(stats.values.rows(), model.h0())};
}

// Trained attention-weighted GBM: G(x) = h0 + sum_t alpha_t(x) B_t(x).
class AttentionModel {
 public:
  AttentionModel(std::shared_ptr<const GBMModel> base, std::vector<double> w, double epsilon, double delta,
                 AttentionConfig config = {}, DistanceScale scale = {}, bool degenerate = false)
      : base_(std::move(base)), w_(std::move(w)), epsilon_(epsilon), delta_(delta), config_(config),
        scale_(std::move(scale)), degenerate_(degenerate) {
    if (!base_) throw ContractError("AttentionModel needs a base model");
    if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
    if (!(delta_ >= 0.0 && delta_ <= 1.0)) throw ContractError("delta must lie in [0, 1]");
    detail::require_same_size(w_.size(), base_->iterations(), "AttentionModel weights");
    if (!w_.empty()) require_simplex(w_, "AttentionModel weights");
  }

  const GBMModel& base() const { return *base_; }
  std::span<const double> w() const { return w_; }
  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  const AttentionConfig& config() const { return config_; }
  const DistanceScale& distance_scale() const { return scale_; }
  // True when the QP objective did not depend on w and uniform weights were used.
  bool degenerate() const { return degenerate_; }

  std::vector<double> weights(std::span<const double> x) const {
    if (w_.empty()) return {};
    return attention_weights(compute_D(*base_, x, delta_, config_.softmax_sign, scale_), w_, epsilon_);
  }

  double predict(std::span<const double> x) const {
    detail::require_same_size(x.size(), base_->feature_count(), "predict_attention input");
    double out = base_->h0();
    const auto alpha = weights(x);
    for (std::size_t t = 1; t <= alpha.size(); ++t) out += alpha[t - 1] * base_->rescaled_pred(t, x);
    return out;
  }

  // Batch prediction from precomputed statistics of the query rows.
  Eigen::VectorXd predict(const LeafStatistics& stats) const {
    const Eigen::Index n = stats.values.rows();
    if (w_.empty()) return Eigen::VectorXd::Constant(n, base_->h0());
    const Eigen::MatrixXd D = softmax_matrix(stats.distance, delta_, config_.softmax_sign);
    const Eigen::Map<const Eigen::VectorXd> wv(w_.data(), static_cast<Eigen::Index>(w_.size()));
    return (Eigen::VectorXd::Constant(n, base_->h0()) + (1.0 - epsilon_) * (D.cwiseProduct(stats.values)).rowwise().sum() +
            epsilon_ * (stats.values * wv))
        .eval();
  }

 private:
  std::shared_ptr<const GBMModel> base_;
  std::vector<double> w_;
  double epsilon_;
  double delta_;
  AttentionConfig config_;
  DistanceScale scale_;
  bool degenerate_;
};

inline double predict_attention(const AttentionModel& model, std::span<const double> x) { return model.predict(x); }

inline std::vector<double> uniform_weights(std::size_t T) {
  return std::vector<double>(T, T ? 1.0 / static_cast<double>(T) : 0.0);
}

// Non-parametric variant: same attention formula with w frozen at 1/T.
inline AttentionModel make_nonparametric(std::shared_ptr<const GBMModel> base, double epsilon, double delta,
                                         AttentionConfig config = {}, DistanceScale scale = {}) {
  const std::size_t T = base ? base->iterations() : 0;
  return {std::move(base), uniform_weights(T), epsilon, delta, config, std::move(scale)};
}

// Linearisation of the training objective in w:
//   sum_s (y_s - h0 - sum_t B_t(x_s)((1 - eps) D_t(x_s) + eps w_t))^2 = ||r - M w||^2
// with M = eps B and r = y - h0 - (1 - eps) rowsum(D o B).
inline SimplexQP assemble_qp(const AttentionFeatures& features, const Vector& targets, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
  detail::require_same_size(static_cast<std::size_t>(targets.size()), static_cast<std::size_t>(features.B.rows()),
                            "assemble_qp targets");
  SimplexQP qp;
  qp.M = epsilon * features.B;
  qp.r = targets - features.h0_preds - (1.0 - epsilon) * features.D.cwiseProduct(features.B).rowwise().sum();
  return qp;
}

inline SimplexQP assemble_qp(const GBMModel& model, const DataMatrix& train_fit, double epsilon, double delta,
                             const AttentionConfig& config = {}) {
  const auto scale = make_distance_scale(train_fit, config.standardize);
  const auto stats = compute_leaf_statistics(model, train_fit.features(), scale);
  return assemble_qp(compute_features(model, stats, delta, config.softmax_sign), train_fit.targets(), epsilon);
}

// Fits w on the given statistics. epsilon = 0 (or an all-zero M) leaves the
// objective constant in w; uniform weights are returned and flagged.
inline AttentionModel fit_attention(std::shared_ptr<const GBMModel> model, const LeafStatistics& stats,
                                    const Vector& targets, double epsilon, double delta, const AttentionConfig& config,
                                    DistanceScale scale) {
  if (!model) throw ContractError("fit_attention needs a base model");
  const std::size_t T = model->iterations();
  if (T == 0) return {std::move(model), {}, epsilon, delta, config, std::move(scale)};
  if (!(delta >= 0.0 && delta <= 1.0)) throw ContractError("delta must lie in [0, 1]");
  if (epsilon == 0.0) return {std::move(model), uniform_weights(T), epsilon, delta, config, std::move(scale), true};
  const auto qp = assemble_qp(compute_features(*model, stats, delta, config.softmax_sign), targets, epsilon);
  auto result = solve(qp, config.solver);
  return {std::move(model), std::move(result.w), epsilon, delta, config, std::move(scale), result.degenerate};
}

inline AttentionModel fit_attention(std::shared_ptr<const GBMModel> model, const DataMatrix& data, double epsilon,
                                    double delta, const AttentionConfig& config = {}) {
  if (!model) throw ContractError("fit_attention needs a base model");
  auto scale = make_distance_scale(data, config.standardize);
  const auto stats = compute_leaf_statistics(*model, data.features(), scale);
  return fit_attention(std::move(model), stats, data.targets(), epsilon, delta, config, std::move(scale));
}

// Training objective of an attention model on the given data.
inline double training_objective(const AttentionModel& model, const LeafStatistics& stats, const Vector& targets) {
  return (targets - model.predict(stats)).squaredNorm();
}

}  // namespace agboost
