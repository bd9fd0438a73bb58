#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "agboost/agboost.hpp"

namespace agboost::testing {

// Property suites run this many random cases from a fixed seed.
inline constexpr int kCases = 1000;
inline constexpr std::uint64_t kPropertySeed = 20240611;

// Test-side randomness, independent of the library's Rng.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  std::uint64_t seed() { return engine_(); }

  Matrix matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = scale * normal();
    return x;
  }

  Vector vector(std::size_t n, double scale = 1.0) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * normal();
    return v;
  }

  std::vector<double> simplex_point(std::size_t T) {
    std::vector<double> w(T);
    double total = 0.0;
    for (double& v : w) {
      v = -std::log(uniform(1e-12, 1.0));
      total += v;
    }
    for (double& v : w) v /= total;
    return w;
  }

  // Small regression dataset with a few discrete-valued columns so ties occur.
  DataMatrix dataset(std::size_t n, std::size_t m) {
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    Vector y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = j % 3 == 2 ? static_cast<double>(index(0, 3)) : normal();
      y[i] = 2.0 * x(i, 0) - x(i, x.cols() - 1) + 0.5 * normal();
    }
    return {std::move(x), std::move(y)};
  }

 private:
  std::mt19937_64 engine_;
};

inline std::span<const double> span_of(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("agboost_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Objective of min ||r - M w||^2 evaluated directly, row by row.
inline double direct_objective(const Eigen::MatrixXd& M, const Eigen::VectorXd& r, std::span<const double> w) {
  double f = 0.0;
  for (Eigen::Index s = 0; s < M.rows(); ++s) {
    double fit = 0.0;
    for (Eigen::Index t = 0; t < M.cols(); ++t) fit += M(s, t) * w[static_cast<std::size_t>(t)];
    f += (r[s] - fit) * (r[s] - fit);
  }
  return f;
}

// Brute-force minimum of ||r - M w||^2 over a grid on the 2- or 3-simplex.
inline double grid_minimum(const Eigen::MatrixXd& M, const Eigen::VectorXd& r, double step) {
  const auto T = M.cols();
  const int k = static_cast<int>(std::lround(1.0 / step));
  const Eigen::MatrixXd Q = M.transpose() * M;
  const Eigen::VectorXd c = M.transpose() * r;
  const double rr = r.squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w(T);
  if (T == 2) {
    for (int a = 0; a <= k; ++a) {
      w << a * step, 1.0 - a * step;
      best = std::min(best, w.dot(Q * w) - 2.0 * c.dot(w) + rr);
    }
  } else if (T == 3) {
    for (int a = 0; a <= k; ++a) {
      for (int b = 0; a + b <= k; ++b) {
        w << a * step, b * step, (k - a - b) * step;
        best = std::min(best, w.dot(Q * w) - 2.0 * c.dot(w) + rr);
      }
    }
  } else {
    throw std::invalid_argument("grid_minimum supports T = 2 or 3");
  }
  return best;
}

}  // namespace agboost::testing
