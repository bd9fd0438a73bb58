#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "agboost/data.hpp"
#include "agboost/errors.hpp"
#include "agboost/rng.hpp"

namespace agboost {

enum class SplitMode {
  Exact,        // every midpoint between consecutive distinct values
  ExtraRandom,  // one uniform threshold per feature, best of those
};

struct TreeConfig {
  std::size_t min_samples_leaf = 10;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  SplitMode split_mode = SplitMode::Exact;
  RngSeed seed{};  // ExtraRandom only
};

struct InternalNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
};

struct LeafNode {
  double value = 0.0;        // mean of fitted targets routed here
  std::vector<double> key;   // mean of feature vectors routed here
  std::size_t count = 0;     // training instances routed here
};

using TreeNode = std::variant<InternalNode, LeafNode>;

// Regression tree stored as a node arena; node 0 is the root. Instances go
// left iff x[feature] <= threshold.
class DecisionTree {
 public:
  DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count)
      : nodes_(std::move(nodes)), feature_count_(feature_count) {
    if (nodes_.empty()) throw ContractError("tree must have at least one node");
  }

  std::size_t feature_count() const { return feature_count_; }
  std::span<const TreeNode> nodes() const { return nodes_; }

  // Arena index of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const {
    detail::require_same_size(x.size(), feature_count_, "tree input");
    std::size_t at = 0;
    while (const auto* split = std::get_if<InternalNode>(&nodes_[at])) {
      at = x[split->feature] <= split->threshold ? split->left : split->right;
    }
    return at;
  }

  const LeafNode& leaf(std::span<const double> x) const { return std::get<LeafNode>(nodes_[leaf_index(x)]); }

  double predict(std::span<const double> x) const { return leaf(x).value; }

  std::span<const double> leaf_key(std::span<const double> x) const { return leaf(x).key; }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return std::holds_alternative<LeafNode>(n); }));
  }

  // Debug dump, one node per line with explicit child indices.
  void write_text(std::ostream& out) const {
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (const auto* s = std::get_if<InternalNode>(&nodes_[i])) {
        out << i << " split feature=" << s->feature << " threshold=" << s->threshold << " left=" << s->left
            << " right=" << s->right << '\n';
      } else {
        const auto& l = std::get<LeafNode>(nodes_[i]);
        out << i << " leaf value=" << l.value << " count=" << l.count << " key=";
        for (std::size_t j = 0; j < l.key.size(); ++j) out << (j ? "," : "") << l.key[j];
        out << '\n';
      }
    }
    out.precision(old);
  }

  std::string to_text() const {
    std::ostringstream s;
    write_text(s);
    return s.str();
  }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) { return a.to_text() == b.to_text(); }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t feature_count_;
};

namespace detail {

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // summed child SSE
  bool valid() const { return score < std::numeric_limits<double>::infinity(); }
};

// Summed squared error of two children from their sufficient statistics.
inline double children_sse(double sum_left, double n_left, double sum_right, double n_right, double sum_sq) {
  return sum_sq - sum_left * sum_left / n_left - sum_right * sum_right / n_right;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeConfig& config)
      : x_(x), y_(y), config_(config), rng_(config.seed) {}

  DecisionTree build() {
    std::vector<std::size_t> all(y_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(std::move(all), 0);
    return {std::move(nodes_), static_cast<std::size_t>(x_.cols())};
  }

 private:
  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back(LeafNode{});

    const auto split = should_stop(rows, depth) ? SplitCandidate{} : find_split(rows);
    if (!split.valid()) {
      nodes_[id] = make_leaf(rows);
      return id;
    }

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(split.feature)) <= split.threshold ? left : right)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t r = grow(std::move(right), depth + 1);
    nodes_[id] = InternalNode{split.feature, split.threshold, l, r};
    return id;
  }

  bool should_stop(const std::vector<std::size_t>& rows, std::size_t depth) const {
    if (config_.max_depth && depth >= *config_.max_depth) return true;
    if (rows.size() < 2 * config_.min_samples_leaf) return true;
    const double first = y_[rows.front()];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return y_[r] == first; });
  }

  LeafNode make_leaf(const std::vector<std::size_t>& rows) const {
    LeafNode leaf;
    leaf.count = rows.size();
    leaf.key.assign(static_cast<std::size_t>(x_.cols()), 0.0);
    double sum = 0.0;
    for (std::size_t r : rows) {
      sum += y_[r];
      for (Eigen::Index j = 0; j < x_.cols(); ++j) leaf.key[static_cast<std::size_t>(j)] += x_(static_cast<Eigen::Index>(r), j);
    }
    const double n = static_cast<double>(rows.size());
    leaf.value = sum / n;
    for (double& k : leaf.key) k /= n;
    return leaf;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& rows) {
    return config_.split_mode == SplitMode::Exact ? exact_split(rows) : random_split(rows);
  }

  SplitCandidate exact_split(const std::vector<std::size_t>& rows) const {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = config_.min_samples_leaf;
    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t r : rows) {
      total += y_[r];
      total_sq += y_[r] * y_[r];
    }

    SplitCandidate best;
    std::vector<std::size_t> order(rows);
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      const auto value = [&](std::size_t r) { return x_(static_cast<Eigen::Index>(r), j); };
      order = rows;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return value(a) < value(b) || (value(a) == value(b) && a < b);
      });
      double sum_left = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        sum_left += y_[order[k - 1]];
        if (k < min_leaf || n - k < min_leaf) continue;
        const double lo = value(order[k - 1]);
        const double hi = value(order[k]);
        if (!(lo < hi)) continue;
        const double score = children_sse(sum_left, static_cast<double>(k), total - sum_left,
                                          static_cast<double>(n - k), total_sq);
        if (score < best.score) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {static_cast<std::size_t>(j), mid, score};
        }
      }
    }
    return best;
  }

  SplitCandidate random_split(const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = config_.min_samples_leaf;
    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t r : rows) {
      total += y_[r];
      total_sq += y_[r] * y_[r];
    }

    SplitCandidate best;
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, x_(static_cast<Eigen::Index>(r), j));
        hi = std::max(hi, x_(static_cast<Eigen::Index>(r), j));
      }
      if (!(lo < hi)) continue;
      const double threshold = rng_.uniform_open(lo, hi);
      double sum_left = 0.0;
      std::size_t n_left = 0;
      for (std::size_t r : rows) {
        if (x_(static_cast<Eigen::Index>(r), j) <= threshold) {
          sum_left += y_[r];
          ++n_left;
        }
      }
      if (n_left < min_leaf || n - n_left < min_leaf) continue;
      const double score = children_sse(sum_left, static_cast<double>(n_left), total - sum_left,
                                        static_cast<double>(n - n_left), total_sq);
      if (score < best.score) best = {static_cast<std::size_t>(j), threshold, score};
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeConfig& config_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

// Greedy top-down squared-error regression tree.
inline DecisionTree fit_tree(const Matrix& x, std::span<const double> targets, const TreeConfig& config) {
  if (config.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");
  detail::require_same_size(static_cast<std::size_t>(x.rows()), targets.size(), "fit_tree");
  if (x.cols() == 0) throw FitError("fit_tree: no features");
  if (targets.size() < config.min_samples_leaf || targets.empty()) {
    throw FitError("fit_tree: " + std::to_string(targets.size()) + " instances is fewer than min_samples_leaf = " +
                   std::to_string(config.min_samples_leaf));
  }
  return detail::TreeBuilder(x, targets, config).build();
}

inline DecisionTree fit_tree(const DataMatrix& data, const TreeConfig& config) {
  return fit_tree(data.features(), std::span<const double>(data.targets().data(), data.n()), config);
}

}  // namespace agboost
