#include "test_support.hpp"

using namespace agboost;

namespace {

SimplexQP identity_qp(std::vector<double> r) {
  SimplexQP qp;
  qp.M = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.size()));
  qp.r = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  return qp;
}

// Nearest grid point of the 3-simplex to v, by enumeration.
std::vector<double> brute_projection(const std::vector<double>& v, double step) {
  const int k = static_cast<int>(std::lround(1.0 / step));
  std::vector<double> best(3);
  double best_d = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= k; ++a) {
    for (int b = 0; a + b <= k; ++b) {
      const std::vector<double> w{a * step, b * step, (k - a - b) * step};
      double d = 0.0;
      for (int i = 0; i < 3; ++i) d += (w[i] - v[i]) * (w[i] - v[i]);
      if (d < best_d) {
        best_d = d;
        best = w;
      }
    }
  }
  return best;
}

}  // namespace

TEST(ProjectSimplex, Examples) {
  EXPECT_EQ(project_simplex(std::vector<double>{0.5, 0.5}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(project_simplex(std::vector<double>{1.0, 1.0}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(project_simplex(std::vector<double>{2.0, 0.0}), (std::vector<double>{1.0, 0.0}));
  for (double w : project_simplex(std::vector<double>{-1.0, -1.0, -1.0})) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
  const auto p = project_simplex(std::vector<double>{0.2, 0.9, -0.4});
  EXPECT_NEAR(p[0], 0.15, 1e-15);
  EXPECT_NEAR(p[1], 0.85, 1e-15);
  EXPECT_EQ(p[2], 0.0);
}

TEST(ProjectSimplex, AgreesWithEnumeration) {
  agboost::testing::Gen gen(21);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> v{gen.uniform(-1, 2), gen.uniform(-1, 2), gen.uniform(-1, 2)};
    const auto p = project_simplex(v);
    const auto b = brute_projection(v, 1e-3);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(p[j], b[j], 1e-3);
  }
}

TEST(Objective, Examples) {
  const auto qp = identity_qp({0.7, 0.3});
  EXPECT_NEAR(objective(qp, std::vector<double>{0.5, 0.5}), 0.08, 1e-15);
  EXPECT_NEAR(objective(qp, std::vector<double>{0.7, 0.3}), 0.0, 1e-15);
  EXPECT_THROW(objective(qp, std::vector<double>{0.7, 0.7}), ContractError);
  EXPECT_THROW(objective(qp, std::vector<double>{1.0}), DimensionError);
}

TEST(Solve, InteriorOptimum) {
  const auto result = solve(identity_qp({0.7, 0.3}));
  EXPECT_NEAR(result.w[0], 0.7, 1e-8);
  EXPECT_NEAR(result.w[1], 0.3, 1e-8);
  EXPECT_NEAR(result.objective, 0.0, 1e-12);
  EXPECT_FALSE(result.degenerate);
}

TEST(Solve, VertexOptimum) {
  const auto result = solve(identity_qp({2.0, 0.0, 0.0}));
  EXPECT_NEAR(result.w[0], 1.0, 1e-9);
  EXPECT_NEAR(result.objective, 1.0, 1e-9);
  EXPECT_LE(result.gap, 1e-8 * (1.0 + result.objective));
}

TEST(Solve, CentreOfSimplex) {
  const auto result = solve(identity_qp({0.0, 0.0, 0.0}));
  for (double w : result.w) EXPECT_NEAR(w, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(result.objective, 1.0 / 3.0, 1e-12);
}

TEST(Solve, MatchesGridOracle) {
  agboost::testing::Gen gen(22);
  for (int i = 0; i < 10; ++i) {
    SimplexQP qp;
    qp.M = gen.matrix(12, 3);
    qp.r = gen.vector(12);
    const auto result = solve(qp);
    EXPECT_TRUE(on_simplex(result.w));
    EXPECT_LE(result.objective, agboost::testing::grid_minimum(qp.M, qp.r, 1e-3) + 1e-6);
    EXPECT_NEAR(result.objective, agboost::testing::direct_objective(qp.M, qp.r, result.w), 1e-10);
  }
}

TEST(Solve, SingleDimension) {
  SimplexQP qp;
  qp.M = Eigen::MatrixXd::Constant(3, 1, 2.0);
  qp.r = Eigen::VectorXd::Ones(3);
  const auto result = solve(qp);
  EXPECT_EQ(result.w, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(result.objective, 3.0);
}

TEST(Solve, ZeroMatrixIsDegenerate) {
  SimplexQP qp;
  qp.M = Eigen::MatrixXd::Zero(5, 4);
  qp.r = Eigen::VectorXd::Ones(5);
  const auto result = solve(qp);
  EXPECT_TRUE(result.degenerate);
  for (double w : result.w) EXPECT_EQ(w, 0.25);
  EXPECT_EQ(result.objective, 5.0);
}

TEST(Solve, RankDeficientIsDeterministic) {
  agboost::testing::Gen gen(23);
  SimplexQP qp;
  qp.M.resize(15, 6);
  const Eigen::MatrixXd base = gen.matrix(15, 2);
  for (Eigen::Index t = 0; t < 6; ++t) qp.M.col(t) = base.col(t % 2) * (1.0 + 0.1 * static_cast<double>(t));
  qp.r = gen.vector(15);
  const auto a = solve(qp);
  const auto b = solve(qp);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_TRUE(on_simplex(a.w));
}

TEST(Solve, ReportsNonConvergence) {
  agboost::testing::Gen gen(24);
  SimplexQP qp;
  qp.M = gen.matrix(30, 8);
  qp.M.col(0) *= 50.0;
  qp.r = gen.vector(30, 10.0);
  SolverConfig config;
  config.max_iter = 1;
  try {
    solve(qp, config);
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_TRUE(on_simplex(e.best_iterate));
    EXPECT_GT(e.gap_estimate, 0.0);
    EXPECT_EQ(e.iterations, 1u);
  }
}

TEST(Solve, RejectsBadInput) {
  SimplexQP qp;
  qp.M = Eigen::MatrixXd::Ones(3, 2);
  qp.r = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(solve(qp), DimensionError);
  qp.r = Eigen::VectorXd::Ones(3);
  qp.M(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve(qp), ContractError);
  qp.M = Eigen::MatrixXd::Ones(3, 0);
  EXPECT_THROW(solve(qp), ContractError);
  qp.M = Eigen::MatrixXd::Ones(3, 2);
  SolverConfig bad;
  bad.tol = 0.0;
  EXPECT_THROW(solve(qp, bad), ConfigError);
}
