#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "agboost/errors.hpp"

namespace agboost {

struct MetricPair {
  double r2 = 0.0;
  double mae = 0.0;
};

// Coefficient of determination 1 - SS_res / SS_tot.
inline double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::require_same_size(y_true.size(), y_pred.size(), "r2");
  if (y_true.size() < 2) throw DegenerateError("r2 needs at least 2 instances");
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DegenerateError("r2 is undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> y_true, std::span<const double> y_pred) {
  detail::require_same_size(y_true.size(), y_pred.size(), "mae");
  if (y_true.empty()) throw DegenerateError("mae needs at least 1 instance");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) sum += std::abs(y_true[i] - y_pred[i]);
  return sum / static_cast<double>(y_true.size());
}

inline MetricPair evaluate(std::span<const double> y_true, std::span<const double> y_pred) {
  return {r2(y_true, y_pred), mae(y_true, y_pred)};
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularised incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ContractError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ContractError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Student-t cumulative distribution with dof degrees of freedom.
inline double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw ContractError("student_t_cdf: dof must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

// Inverse of student_t_cdf for p in (0, 1), by bisection on a bracket.
inline double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("student_t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct TTestResult {
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // two-sided
  double ci_lower = 0.0;
  double ci_upper = 0.0;  // 95% interval for the mean difference
  std::size_t dof = 0;
};

// Paired t-test on per-dataset performance differences against zero.
inline TTestResult paired_t_test(std::span<const double> diffs) {
  const std::size_t k = diffs.size();
  if (k < 2) throw DegenerateError("paired t-test needs at least 2 differences");
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  if (!(sd > 0.0)) throw DegenerateError("paired t-test is undefined for zero-variance differences");

  TTestResult out;
  out.dof = k - 1;
  const double se = sd / std::sqrt(static_cast<double>(k));
  out.mean_diff = mean;
  out.t_statistic = mean / se;
  const auto dof = static_cast<double>(out.dof);
  out.p_value = std::min(1.0, 2.0 * student_t_cdf(-std::abs(out.t_statistic), dof));
  const double crit = student_t_quantile(0.975, dof);
  out.ci_lower = mean - crit * se;
  out.ci_upper = mean + crit * se;
  return out;
}

}  // namespace agboost
