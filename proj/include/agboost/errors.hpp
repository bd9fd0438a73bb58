#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace agboost {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: empty datasets, unparsable CSV cells, missing files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (grids out of range, bad generator parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A model could not be fitted on the given data.
class FitError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated (simplex membership, index range).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the supplied sample (constant targets, zero variance).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Raised by the simplex QP solver when max_iter is reached before the duality
// gap drops below tolerance. Carries the best iterate seen.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> best, double gap,
                      std::size_t iterations)
      : Error(what), best_iterate(std::move(best)), gap_estimate(gap), iterations(iterations) {}

  std::vector<double> best_iterate;
  double gap_estimate;
  std::size_t iterations;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

}  // namespace detail
}  // namespace agboost
