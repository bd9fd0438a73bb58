#include <cmath>
#include <numbers>
#include <set>

#include "test_support.hpp"

using namespace agboost;
using agboost::testing::temp_dir;
using agboost::testing::write_file;

TEST(Friedman1, FormulaAtAllHalves) {
  const std::vector<double> x(10, 0.5);
  // 10 sin(pi/4) + 20 * 0 + 10 * 0.5 + 5 * 0.5
  const double expected = 10.0 * std::sqrt(0.5) + 5.0 + 2.5;
  EXPECT_NEAR(friedman::target1(x), expected, 1e-12);
  EXPECT_NEAR(friedman::target1(x), 14.5711, 1e-4);
}

TEST(Friedman1, AllTermsVanish) {
  std::vector<double> x(10, 0.9);
  x[0] = 0.0;
  x[1] = 0.7;
  x[2] = 0.5;
  x[3] = 0.0;
  x[4] = 0.0;
  EXPECT_NEAR(friedman::target1(x), 0.0, 1e-12);
}

TEST(Friedman1, ShapeRangesAndDeterminism) {
  const auto a = gen_friedman1(50, Noise::absolute(1.0), RngSeed{3});
  const auto b = gen_friedman1(50, Noise::absolute(1.0), RngSeed{3});
  EXPECT_EQ(a.n(), 50u);
  EXPECT_EQ(a.m(), 10u);
  EXPECT_TRUE(a == b);
  EXPECT_GE(a.features().minCoeff(), 0.0);
  EXPECT_LT(a.features().maxCoeff(), 1.0);
  EXPECT_FALSE(a == gen_friedman1(50, Noise::absolute(1.0), RngSeed{4}));
}

TEST(Friedman1, NoiseDoesNotMoveFeatures) {
  const auto clean = gen_friedman1(30, Noise::none(), RngSeed{9});
  const auto noisy = gen_friedman1(30, Noise::absolute(2.0), RngSeed{9});
  EXPECT_EQ(clean.features(), noisy.features());
  EXPECT_NE(clean.targets(), noisy.targets());
}

TEST(Friedman1, EmptyIsAnError) { EXPECT_THROW(gen_friedman1(0, Noise::none(), RngSeed{1}), DataError); }

TEST(Friedman2, HandEvaluatedPoint) {
  const std::vector<double> x{3.0, 40.0 * std::numbers::pi, 0.0, 1.0};
  EXPECT_NEAR(friedman::target2(x), 3.0000105, 1e-7);
}

TEST(Friedman2, BothTermsVanish) {
  const double x2 = 200.0;
  const double x4 = 2.0;
  const double x3 = 1.0 / (x2 * x2 * x4);  // x2 x3 = 1 / (x2 x4)
  const std::vector<double> x{0.0, x2, x3, x4};
  EXPECT_NEAR(friedman::target2(x), 0.0, 1e-12);
}

TEST(Friedman2, ShapeAndRanges) {
  const auto d = gen_friedman2(200, Noise::none(), RngSeed{5});
  EXPECT_EQ(d.m(), 4u);
  EXPECT_EQ(d.n(), 200u);
  const auto& x = d.features();
  EXPECT_GE(x.col(0).minCoeff(), 0.0);
  EXPECT_LE(x.col(0).maxCoeff(), 100.0);
  EXPECT_GE(x.col(1).minCoeff(), 40.0 * std::numbers::pi);
  EXPECT_LE(x.col(1).maxCoeff(), 560.0 * std::numbers::pi);
  EXPECT_GE(x.col(2).minCoeff(), 0.0);
  EXPECT_LE(x.col(2).maxCoeff(), 1.0);
  EXPECT_GE(x.col(3).minCoeff(), 1.0);
  EXPECT_LE(x.col(3).maxCoeff(), 11.0);
}

TEST(Friedman2, RelativeNoiseScalesWithSignal) {
  const auto clean = gen_friedman2(500, Noise::none(), RngSeed{8});
  const auto noisy = gen_friedman2(500, Noise::relative(1.0 / 3.0), RngSeed{8});
  const Vector diff = noisy.targets() - clean.targets();
  const auto sd = [](const Vector& v) {
    return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
  };
  EXPECT_NEAR(sd(diff) / sd(clean.targets()), 1.0 / 3.0, 0.05);
}

TEST(Friedman3, ZeroAndQuarterPi) {
  const double x2 = 300.0;
  const double x4 = 4.0;
  const double x3 = 1.0 / (x2 * x2 * x4);
  EXPECT_NEAR(friedman::target3(std::vector<double>{50.0, x2, x3, x4}), 0.0, 1e-12);

  const double x3b = 0.5;
  const double x1 = x2 * x3b - 1.0 / (x2 * x4);
  EXPECT_NEAR(friedman::target3(std::vector<double>{x1, x2, x3b, x4}), std::numbers::pi / 4.0, 1e-12);
  EXPECT_EQ(gen_friedman3(10, Noise::none(), RngSeed{1}).m(), 4u);
}

TEST(Regression, SingleInformativeFeature) {
  const auto r = gen_regression_with_coef(40, 5, 1, Noise::none(), RngSeed{11});
  const double c = r.coefficients[0];
  EXPECT_GT(c, 0.0);
  for (std::size_t j = 1; j < 5; ++j) EXPECT_EQ(r.coefficients[j], 0.0);
  for (std::size_t i = 0; i < r.data.n(); ++i) EXPECT_EQ(r.data.target(i), c * r.data.row(i)[0]);
}

TEST(Regression, ShapeAndSeeds) {
  EXPECT_EQ(gen_regression(20, 100, 10, Noise::none(), RngSeed{1}).m(), 100u);
  const auto a = gen_regression_with_coef(20, 100, 10, Noise::none(), RngSeed{1});
  const auto b = gen_regression_with_coef(20, 100, 10, Noise::none(), RngSeed{2});
  EXPECT_NE(a.coefficients, b.coefficients);
  EXPECT_THROW(gen_regression(20, 5, 6, Noise::none(), RngSeed{1}), ConfigError);
}

TEST(Sparse, HandEvaluatedTargets) {
  const auto d = gen_sparse_uncorrelated(200, Noise::none(), RngSeed{4});
  EXPECT_EQ(d.m(), 10u);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto x = d.row(i);
    EXPECT_NEAR(d.target(i), x[0] + 2 * x[1] - 2 * x[2] - 1.5 * x[3], 1e-12);
  }
  // Unit vector and the (1,1,1,1,0,...) case by the same formula.
  const auto formula = [](std::span<const double> x) { return x[0] + 2 * x[1] - 2 * x[2] - 1.5 * x[3]; };
  std::vector<double> e1(10, 0.0);
  e1[0] = 1.0;
  EXPECT_EQ(formula(e1), 1.0);
  std::vector<double> ones(10, 0.0);
  std::fill(ones.begin(), ones.begin() + 4, 1.0);
  EXPECT_EQ(formula(ones), -0.5);
}

TEST(DataMatrix, RejectsBadInput) {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  EXPECT_THROW(DataMatrix(x, Vector::Zero(3)), DataError);
  EXPECT_THROW(DataMatrix(Matrix(0, 1), Vector(0)), DataError);
  Matrix bad = x;
  bad(1, 0) = std::nan("");
  EXPECT_THROW(DataMatrix(bad, Vector::Zero(2)), DataError);
  Vector inf = Vector::Zero(2);
  inf[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(DataMatrix(x, inf), DataError);
}

TEST(LoadCsv, HeaderAndTargetByName) {
  const auto dir = temp_dir("csv_basic");
  write_file(dir / "t.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  const auto d = load_csv(dir / "t.csv", std::string("y"));
  EXPECT_EQ(d.n(), 3u);
  EXPECT_EQ(d.m(), 2u);
  EXPECT_EQ(d.target(2), 9.0);
  EXPECT_EQ(d.row(1)[1], 5.0);

  const auto by_index = load_csv_table(dir / "t.csv", std::size_t{0});
  EXPECT_EQ(by_index.data.target(1), 4.0);
  EXPECT_EQ(by_index.header, (std::vector<std::string>{"b", "y"}));
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
  const auto dir = temp_dir("csv_bad");
  write_file(dir / "t.csv", "a,b,y\n1,2,3\n4,abc,6\n");
  try {
    load_csv(dir / "t.csv", std::string("y"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("abc"), std::string::npos);
    EXPECT_NE(msg.find("row 3"), std::string::npos);
    EXPECT_NE(msg.find("column 2"), std::string::npos);
  }
}

TEST(LoadCsv, Errors) {
  const auto dir = temp_dir("csv_errors");
  EXPECT_THROW(load_csv(dir / "missing.csv", std::string("y")), DataError);
  write_file(dir / "t.csv", "a,b\n1,2\n");
  EXPECT_THROW(load_csv(dir / "t.csv", std::string("y")), DataError);
  EXPECT_THROW(load_csv(dir / "t.csv", std::size_t{5}), DataError);
  write_file(dir / "ragged.csv", "a,b\n1,2\n3\n");
  EXPECT_THROW(load_csv(dir / "ragged.csv", std::string("b")), DataError);
  write_file(dir / "empty.csv", "a,b\n");
  EXPECT_THROW(load_csv(dir / "empty.csv", std::string("b")), DataError);
}

TEST(LoadCsv, QuotesWhitespaceAndCrlf) {
  const auto dir = temp_dir("csv_formats");
  write_file(dir / "q.csv", "\"x one\",\"y\"\r\n\"1.5\",2\r\n3,\"4\"\r\n");
  const auto q = load_csv(dir / "q.csv", std::string("y"));
  EXPECT_EQ(q.n(), 2u);
  EXPECT_EQ(q.row(0)[0], 1.5);

  write_file(dir / "w.data", " 1.0  2.0\t3.0\n4 5 6\n\n");
  CsvOptions ws;
  ws.has_header = false;
  ws.delimiter = ' ';
  const auto w = load_csv(dir / "w.data", std::size_t{2}, ws);
  EXPECT_EQ(w.n(), 2u);
  EXPECT_EQ(w.target(1), 6.0);

  write_file(dir / "s.csv", "a;q\n1;2\n");
  CsvOptions semi;
  semi.delimiter = ';';
  EXPECT_EQ(load_csv(dir / "s.csv", std::string("q"), semi).target(0), 2.0);
}

TEST(LoadCsv, WriteThenReadRoundTrip) {
  const auto dir = temp_dir("csv_roundtrip");
  const auto d = gen_friedman3(25, Noise::relative(0.3), RngSeed{2});
  write_csv(dir / "f3.csv", d);
  EXPECT_TRUE(load_csv(dir / "f3.csv", std::string("y")) == d);
}

TEST(LoadCsv, BundledBostonHousing) {
  const auto d = load_csv(std::filesystem::path(AGBOOST_DATA_DIR) / "boston_housing.csv", std::string("MEDV"));
  EXPECT_EQ(d.n(), 506u);
  EXPECT_EQ(d.m(), 13u);
}

TEST(LoadCsv, BundledDiabetes) {
  const auto d = load_csv(std::filesystem::path(AGBOOST_DATA_DIR) / "diabetes.csv", std::string("target"));
  EXPECT_EQ(d.n(), 442u);
  EXPECT_EQ(d.m(), 10u);
}

TEST(Split, SizesFollowRounding) {
  EXPECT_EQ(split(10, RngSeed{1}).train_idx.size(), 8u);
  EXPECT_EQ(split(10, RngSeed{1}).test_idx.size(), 2u);
  // 4 * 506 / 5 = 404.8
  EXPECT_EQ(split(506, RngSeed{1}).train_idx.size(), 405u);
  EXPECT_EQ(split(506, RngSeed{1}).test_idx.size(), 101u);
  // 4 * 442 / 5 = 353.6; 4 * 308 / 5 = 246.4
  EXPECT_EQ(train_size(442), 354u);
  EXPECT_EQ(train_size(308), 246u);
  EXPECT_EQ(train_size(5), 4u);
}

TEST(Split, DeterministicAndPartitioning) {
  const auto a = split(37, RngSeed{12});
  const auto b = split(37, RngSeed{12});
  EXPECT_EQ(a.train_idx, b.train_idx);
  EXPECT_EQ(a.test_idx, b.test_idx);
  std::set<std::size_t> all(a.train_idx.begin(), a.train_idx.end());
  all.insert(a.test_idx.begin(), a.test_idx.end());
  EXPECT_EQ(all.size(), 37u);
  EXPECT_NE(split(37, RngSeed{13}).train_idx, a.train_idx);
}

TEST(Split, TooFewInstances) { EXPECT_THROW(split(4, RngSeed{1}), DataError); }

TEST(Rng, SeedDerivationIsStable) {
  EXPECT_EQ(RngSeed{5}.offset(3), RngSeed{8});
  EXPECT_NE(RngSeed{5}.derive(0), RngSeed{5}.derive(1));
  EXPECT_EQ(RngSeed{5}.derive(7), RngSeed{5}.derive(7));
  // mt19937_64 reference: the 10000th output for the default seed.
  std::mt19937_64 ref;
  ref.discard(9999);
  EXPECT_EQ(ref(), 9981545732273789042ULL);
  Rng rng(RngSeed{5489});
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  EXPECT_EQ(rng.next_u64(), 9981545732273789042ULL);
}
