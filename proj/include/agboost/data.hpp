#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agboost/errors.hpp"
#include "agboost/rng.hpp"

namespace agboost {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// n instances x m features plus a target per instance. Immutable after
// construction; the constructor rejects empty, ragged or non-finite input.
class DataMatrix {
 public:
  DataMatrix(Matrix features, Vector targets) : features_(std::move(features)), targets_(std::move(targets)) {
    if (features_.rows() == 0) throw DataError("dataset is empty");
    if (features_.cols() == 0) throw DataError("dataset has no features");
    if (features_.rows() != targets_.size()) {
      throw DataError("feature rows (" + std::to_string(features_.rows()) + ") != targets (" +
                      std::to_string(targets_.size()) + ")");
    }
    if (!features_.allFinite() || !targets_.allFinite()) throw DataError("dataset contains NaN or Inf");
  }

  std::size_t n() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(features_.cols()); }

  const Matrix& features() const { return features_; }
  const Vector& targets() const { return targets_; }

  std::span<const double> row(std::size_t i) const { return {features_.row(static_cast<Eigen::Index>(i)).data(), m()}; }
  double target(std::size_t i) const { return targets_[static_cast<Eigen::Index>(i)]; }

  DataMatrix subset(std::span<const std::size_t> rows) const {
    Matrix f(static_cast<Eigen::Index>(rows.size()), features_.cols());
    Vector t(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k] >= n()) throw ContractError("subset row index out of range");
      f.row(static_cast<Eigen::Index>(k)) = features_.row(static_cast<Eigen::Index>(rows[k]));
      t[static_cast<Eigen::Index>(k)] = targets_[static_cast<Eigen::Index>(rows[k])];
    }
    return {std::move(f), std::move(t)};
  }

  friend bool operator==(const DataMatrix& a, const DataMatrix& b) {
    return a.features_.rows() == b.features_.rows() && a.features_.cols() == b.features_.cols() &&
           a.features_ == b.features_ && a.targets_ == b.targets_;
  }

 private:
  Matrix features_;
  Vector targets_;
};

struct SplitIndices {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
};

// Noise level for the synthetic generators. Either an absolute standard
// deviation or a multiple of the sample standard deviation of the noiseless
// targets.
struct Noise {
  enum class Kind { Absolute, RelativeToSignal };
  Kind kind = Kind::Absolute;
  double value = 0.0;

  static constexpr Noise absolute(double sd) { return {Kind::Absolute, sd}; }
  static constexpr Noise relative(double fraction) { return {Kind::RelativeToSignal, fraction}; }
  static constexpr Noise none() { return {Kind::Absolute, 0.0}; }
};

namespace friedman {

inline double target1(std::span<const double> x) {
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
         5.0 * x[4];
}

inline double target2(std::span<const double> x) {
  const double inner = x[1] * x[2] - 1.0 / (x[1] * x[3]);
  return std::sqrt(x[0] * x[0] + inner * inner);
}

inline double target3(std::span<const double> x) {
  return std::atan((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]);
}

}  // namespace friedman

namespace detail {

inline void require_rows(std::size_t n) {
  if (n == 0) throw DataError("cannot generate an empty dataset (n = 0)");
}

inline void check_noise(const Noise& noise) {
  if (!(noise.value >= 0.0) || !std::isfinite(noise.value)) throw ConfigError("noise level must be finite and >= 0");
}

inline double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

// Noise is drawn after all features, one variate per row, so features are
// identical regardless of the noise level.
inline Vector add_noise(Vector clean, const Noise& noise, Rng& rng) {
  check_noise(noise);
  double sd = noise.value;
  if (noise.kind == Noise::Kind::RelativeToSignal) sd *= sample_sd(clean);
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    const double z = rng.normal();
    clean[i] += sd * z;
  }
  return clean;
}

template <typename Target>
DataMatrix friedman_234(std::size_t n, const Noise& noise, RngSeed seed, Target target) {
  require_rows(n);
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), 4);
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(0.0, 100.0);
    x(i, 1) = rng.uniform(40.0 * std::numbers::pi, 560.0 * std::numbers::pi);
    x(i, 2) = rng.uniform(0.0, 1.0);
    x(i, 3) = rng.uniform(1.0, 11.0);
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = target(std::span<const double>(x.row(i).data(), 4));
  return {std::move(x), add_noise(std::move(y), noise, rng)};
}

}  // namespace detail

// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + noise, 10 features on [0, 1].
inline DataMatrix gen_friedman1(std::size_t n, Noise noise, RngSeed seed) {
  detail::require_rows(n);
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), 10);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < 10; ++j) x(i, j) = rng.uniform();
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = friedman::target1({x.row(i).data(), 10});
  return {std::move(x), detail::add_noise(std::move(y), noise, rng)};
}

inline DataMatrix gen_friedman2(std::size_t n, Noise noise, RngSeed seed) {
  return detail::friedman_234(n, noise, seed, friedman::target2);
}

inline DataMatrix gen_friedman3(std::size_t n, Noise noise, RngSeed seed) {
  return detail::friedman_234(n, noise, seed, friedman::target3);
}

// Linear model on standard-normal features. The informative columns are the
// first n_informative ones; coefficients are 100 * U[0, 1).
struct RegressionDataset {
  DataMatrix data;
  std::vector<double> coefficients;  // length n_features, zero for uninformative columns
};

inline RegressionDataset gen_regression_with_coef(std::size_t n, std::size_t n_features, std::size_t n_informative,
                                                  Noise noise, RngSeed seed) {
  detail::require_rows(n);
  if (n_features == 0) throw ConfigError("n_features must be positive");
  if (n_informative > n_features) {
    throw ConfigError("n_informative (" + std::to_string(n_informative) + ") exceeds n_features (" +
                      std::to_string(n_features) + ")");
  }
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  std::vector<double> coef(n_features, 0.0);
  for (std::size_t j = 0; j < n_informative; ++j) coef[j] = 100.0 * rng.uniform();
  Vector y = Vector::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < n_informative; ++j) y[i] += coef[j] * x(i, static_cast<Eigen::Index>(j));
  auto noisy = detail::add_noise(std::move(y), noise, rng);
  return {DataMatrix(std::move(x), std::move(noisy)), std::move(coef)};
}

inline DataMatrix gen_regression(std::size_t n, std::size_t n_features, std::size_t n_informative, Noise noise,
                                 RngSeed seed) {
  return gen_regression_with_coef(n, n_features, n_informative, noise, seed).data;
}

// y = x1 + 2 x2 - 2 x3 - 1.5 x4 + noise, 10 standard-normal features.
inline DataMatrix gen_sparse_uncorrelated(std::size_t n, Noise noise, RngSeed seed) {
  detail::require_rows(n);
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), 10);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < 10; ++j) x(i, j) = rng.normal();
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = x(i, 0) + 2.0 * x(i, 1) - 2.0 * x(i, 2) - 1.5 * x(i, 3);
  return {std::move(x), detail::add_noise(std::move(y), noise, rng)};
}

// Column selector for load_csv: header name or zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct CsvOptions {
  bool has_header = true;
  // ' ' means "runs of whitespace", which covers the whitespace-separated UCI files.
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  if (delimiter == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      out.emplace_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_cell(std::string_view raw, std::size_t row, std::size_t col) {
  const auto s = trim(raw);
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError("non-numeric cell '" + std::string(s) + "' at row " + std::to_string(row) + ", column " +
                    std::to_string(col));
  }
  return value;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  DataMatrix data;
};

// Reads delimited numeric text. The target column is moved into the target
// vector; remaining columns keep their file order. Row numbers in errors are
// 1-based file lines; columns are 1-based.
inline CsvTable load_csv_table(const std::filesystem::path& path, const ColumnRef& target_column,
                               const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line, options.delimiter);
    if (options.has_header && header.empty() && rows.empty()) {
      for (auto& c : cells) header.emplace_back(detail::trim(c));
      width = header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw DataError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(width));
    }
    std::vector<double> values(width);
    for (std::size_t j = 0; j < width; ++j) values[j] = detail::parse_cell(cells[j], line_no, j + 1);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("CSV file has no data rows: " + path.string());

  std::size_t target = 0;
  if (const auto* name = std::get_if<std::string>(&target_column)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError("target column '" + *name + "' not found in " + path.string());
    target = static_cast<std::size_t>(it - header.begin());
  } else {
    target = std::get<std::size_t>(target_column);
    if (target >= width) {
      throw DataError("target column index " + std::to_string(target) + " out of range (" + std::to_string(width) +
                      " columns)");
    }
  }
  if (width < 2) throw DataError("CSV needs at least one feature column besides the target");

  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == target) {
        y[static_cast<Eigen::Index>(i)] = rows[i][j];
      } else {
        x(static_cast<Eigen::Index>(i), c++) = rows[i][j];
      }
    }
  }
  if (!header.empty()) header.erase(header.begin() + static_cast<std::ptrdiff_t>(target));
  return {std::move(header), DataMatrix(std::move(x), std::move(y))};
}

inline DataMatrix load_csv(const std::filesystem::path& path, const ColumnRef& target_column,
                           const CsvOptions& options = {}) {
  return load_csv_table(path, target_column, options).data;
}

// Writes features followed by the target as the last column.
inline void write_csv(const std::filesystem::path& path, const DataMatrix& data,
                      std::span<const std::string> feature_names = {}, const std::string& target_name = "y") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  out.precision(17);
  for (std::size_t j = 0; j < data.m(); ++j) {
    out << (j < feature_names.size() ? feature_names[j] : "x" + std::to_string(j + 1)) << ',';
  }
  out << target_name << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (double v : data.row(i)) out << v << ',';
    out << data.target(i) << '\n';
  }
  if (!out) throw DataError("failed writing CSV file: " + path.string());
}

// round(4n/5) with ties rounded up, computed exactly in integers.
constexpr std::size_t train_size(std::size_t n) { return (8 * n + 5) / 10; }

inline SplitIndices split(std::size_t n, RngSeed seed) {
  if (n < 5) throw DataError("split needs at least 5 instances, got " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  const std::size_t n_train = train_size(n);
  SplitIndices out;
  out.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return out;
}

}  // namespace agboost
