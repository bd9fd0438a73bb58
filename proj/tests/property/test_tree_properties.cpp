#include "test_support.hpp"

using namespace agboost;
using agboost::testing::Gen;
using agboost::testing::kCases;
using agboost::testing::kPropertySeed;

namespace {

struct Case {
  DataMatrix data;
  TreeConfig config;
};

Case random_case(Gen& gen) {
  const std::size_t n = gen.index(2, 80);
  auto data = gen.dataset(n, gen.index(1, 5));
  TreeConfig config;
  config.min_samples_leaf = gen.index(1, std::min<std::size_t>(n, 8));
  if (gen.uniform() < 0.3) config.max_depth = gen.index(0, 4);
  config.split_mode = gen.uniform() < 0.5 ? SplitMode::Exact : SplitMode::ExtraRandom;
  config.seed = RngSeed{gen.seed()};
  return {std::move(data), config};
}

}  // namespace

TEST(TreeProperties, LeavesSummariseRoutedInstances) {
  Gen gen(kPropertySeed + 10);
  for (int c = 0; c < kCases; ++c) {
    const auto [data, config] = random_case(gen);
    const auto tree = fit_tree(data, config);
    const std::size_t m = data.m();

    std::map<std::size_t, std::vector<std::size_t>> routed;
    for (std::size_t i = 0; i < data.n(); ++i) routed[tree.leaf_index(data.row(i))].push_back(i);

    std::size_t total = 0;
    for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
      const auto* leaf = std::get_if<LeafNode>(&tree.nodes()[k]);
      if (!leaf) continue;
      const auto& rows = routed[k];
      ASSERT_EQ(leaf->count, rows.size());
      ASSERT_GE(leaf->count, config.min_samples_leaf);
      total += leaf->count;
      double mean_y = 0.0;
      std::vector<double> key(m, 0.0);
      for (auto i : rows) {
        mean_y += data.target(i);
        for (std::size_t j = 0; j < m; ++j) key[j] += data.row(i)[j];
      }
      mean_y /= static_cast<double>(rows.size());
      ASSERT_NEAR(leaf->value, mean_y, 1e-12 * std::max(1.0, std::abs(mean_y)));
      for (std::size_t j = 0; j < m; ++j) {
        const double kj = key[j] / static_cast<double>(rows.size());
        ASSERT_NEAR(leaf->key[j], kj, 1e-12 * std::max(1.0, std::abs(kj)));
      }
      for (auto i : rows) ASSERT_EQ(tree.predict(data.row(i)), leaf->value);
    }
    ASSERT_EQ(total, data.n());
  }
}

TEST(TreeProperties, FittingIsDeterministic) {
  Gen gen(kPropertySeed + 11);
  for (int c = 0; c < kCases; ++c) {
    const auto [data, config] = random_case(gen);
    ASSERT_TRUE(fit_tree(data, config) == fit_tree(data, config));
  }
}

TEST(TreeProperties, ExactModeIgnoresSeed) {
  Gen gen(kPropertySeed + 12);
  for (int c = 0; c < kCases; ++c) {
    auto [data, config] = random_case(gen);
    config.split_mode = SplitMode::Exact;
    const auto a = fit_tree(data, config);
    config.seed = RngSeed{gen.seed()};
    ASSERT_TRUE(a == fit_tree(data, config));
  }
}

TEST(TreeProperties, ThresholdsSeparateChildren) {
  Gen gen(kPropertySeed + 13);
  for (int c = 0; c < kCases; ++c) {
    const auto [data, config] = random_case(gen);
    const auto tree = fit_tree(data, config);
    for (const auto& node : tree.nodes()) {
      const auto* s = std::get_if<InternalNode>(&node);
      if (!s) continue;
      const auto col = data.features().col(static_cast<Eigen::Index>(s->feature));
      ASSERT_GE(s->threshold, col.minCoeff());
      ASSERT_LT(s->threshold, col.maxCoeff());
    }
  }
}
