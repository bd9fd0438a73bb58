#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <sstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agboost/errors.hpp"

namespace agboost {

// min over the probability simplex of ||r - M w||^2.
struct SimplexQP {
  Eigen::MatrixXd M;  // n x T
  Eigen::VectorXd r;  // n

  std::size_t dimension() const { return static_cast<std::size_t>(M.cols()); }

  void validate() const {
    if (M.rows() != r.size()) {
      throw DimensionError("SimplexQP: M has " + std::to_string(M.rows()) + " rows but r has " +
                           std::to_string(r.size()) + " entries");
    }
    if (M.cols() == 0) throw ContractError("SimplexQP: dimension T must be >= 1");
    if (!M.allFinite() || !r.allFinite()) throw ContractError("SimplexQP: non-finite entries");
  }
};

struct SolverConfig {
  double tol = 1e-8;  // bound on the duality gap relative to 1 + |objective|
  std::size_t max_iter = 10000;
  std::size_t gradient_steps = 200;  // projected-gradient iterations before the active-set phase

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("SolverConfig: tol must be > 0");
    if (max_iter < 1) throw ConfigError("SolverConfig: max_iter must be >= 1");
  }
};

struct SolveResult {
  std::vector<double> w;
  double objective = 0.0;
  double gap = 0.0;  // Frank-Wolfe duality gap, an upper bound on objective - optimum
  std::size_t iterations = 0;
  bool degenerate = false;  // objective constant in w; uniform returned
};

inline constexpr double kSimplexTolerance = 1e-9;

inline bool on_simplex(std::span<const double> w, double tol = kSimplexTolerance) {
  if (w.empty()) return false;
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= -tol) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline void require_simplex(std::span<const double> w, const char* what) {
  if (!on_simplex(w)) throw ContractError(std::string(what) + ": vector is not on the probability simplex");
}

// Euclidean projection onto {w : w >= 0, sum w = 1} by the sort-and-threshold
// rule. The result is renormalised so rounding in v - tau cannot push the sum
// off one for large-magnitude inputs.
inline std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw ContractError("project_simplex: empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw ContractError("project_simplex: non-finite entry");
  }
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::max(v[i] - tau, 0.0);
    total += w[i];
  }
  if (!(total > 0.0)) {
    // Only reachable through catastrophic cancellation; fall back to the argmax vertex.
    std::fill(w.begin(), w.end(), 0.0);
    w[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())] = 1.0;
    return w;
  }
  for (double& x : w) x /= total;
  return w;
}

inline double objective(const SimplexQP& qp, std::span<const double> w) {
  qp.validate();
  detail::require_same_size(w.size(), qp.dimension(), "objective");
  require_simplex(w, "objective");
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  return (qp.r - qp.M * wv).squaredNorm();
}

namespace detail {

inline std::string format_g(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// Largest eigenvalue of M^T M by power iteration on products with M.
inline double power_iteration(const Eigen::MatrixXd& M, int iterations = 20, double tol = 1e-10) {
  const Eigen::Index T = M.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(T, 1.0 / std::sqrt(static_cast<double>(T)));
  // Deterministic perturbation so v is not orthogonal to the top eigenvector
  // when M^T M has symmetric structure.
  for (Eigen::Index i = 0; i < T; ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd qv = M.transpose() * (M * v);
    const double norm = qv.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(qv);
    v = qv / norm;
    const bool done = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    if (done) break;
  }
  // Power iteration approaches from below; pad the estimate, capped by the
  // Frobenius norm which bounds the spectral norm from above.
  return std::min(std::max(lambda, 0.0) * 1.01, M.squaredNorm());
}

// Objective and gradient evaluated from the residual r - M w, which keeps full
// relative accuracy when the optimum is small compared with ||r||^2.
struct LeastSquaresForm {
  const Eigen::MatrixXd& M;
  const Eigen::VectorXd& r;

  double value(const Eigen::VectorXd& w) const { return (r - M * w).squaredNorm(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return -2.0 * (M.transpose() * (r - M * w)); }
};

inline double fw_gap(const Eigen::VectorXd& grad, const Eigen::VectorXd& w) {
  return std::max(0.0, grad.dot(w) - grad.minCoeff());
}

inline Eigen::VectorXd project(const Eigen::VectorXd& v) {
  const auto p = project_simplex(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

// Minimiser of f over {w : sum w = 1, w_t = 0 outside `free`}. The constraint
// is eliminated through the first free coordinate; the reduced normal
// equations are assembled from the Gram matrix Q = M^T M and c = M^T r and
// solved by LDLT, falling back to column-pivoted QR on the reduced least-squares
// problem when the normal equations are numerically singular.
inline Eigen::VectorXd equality_qp(const LeastSquaresForm& f, const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                                   const std::vector<Eigen::Index>& free, Eigen::Index T) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(T);
  const Eigen::Index pivot = free.front();
  const auto k = static_cast<Eigen::Index>(free.size());
  if (k == 1) {
    w[pivot] = 1.0;
    return w;
  }
  Eigen::MatrixXd N(k - 1, k - 1);
  Eigen::VectorXd rhs(k - 1);
  const double qpp = Q(pivot, pivot);
  for (Eigen::Index a = 1; a < k; ++a) {
    const Eigen::Index ia = free[a];
    rhs[a - 1] = c[ia] - c[pivot] - Q(ia, pivot) + qpp;
    for (Eigen::Index b = 1; b < k; ++b) {
      const Eigen::Index ib = free[b];
      N(a - 1, b - 1) = Q(ia, ib) - Q(ia, pivot) - Q(pivot, ib) + qpp;
    }
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(N);
  Eigen::VectorXd v;
  bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (ok) {
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    ok = dmax > 0.0 && ldlt.vectorD().minCoeff() > 1e-12 * dmax;
  }
  const auto assemble = [&](const Eigen::VectorXd& reduced) {
    w.setZero();
    w[pivot] = 1.0 - reduced.sum();
    for (Eigen::Index a = 1; a < k; ++a) w[free[a]] = reduced[a - 1];
  };
  if (ok) {
    v = ldlt.solve(rhs);
    // Refine against the residual computed from M itself; the normal
    // equations alone lose half the digits on ill-conditioned supports.
    for (int pass = 0; pass < 2 && v.allFinite(); ++pass) {
      assemble(v);
      const Eigen::VectorXd residual = f.r - f.M * w;
      const double rp = f.M.col(pivot).dot(residual);
      for (Eigen::Index a = 1; a < k; ++a) rhs[a - 1] = f.M.col(free[a]).dot(residual) - rp;
      v += ldlt.solve(rhs);
    }
    ok = v.allFinite();
  }
  if (!ok) {
    Eigen::MatrixXd A(f.M.rows(), k - 1);
    for (Eigen::Index a = 1; a < k; ++a) A.col(a - 1) = f.M.col(free[a]) - f.M.col(pivot);
    v = A.colPivHouseholderQr().solve(f.r - f.M.col(pivot));
  }
  assemble(v);
  return w;
}

struct ActiveSetResult {
  Eigen::VectorXd w;
  std::size_t steps = 0;
  bool optimal = false;
};

// Primal active-set method started from a feasible w. Each step either moves
// to the equality-constrained optimum on the free set, or stops at the first
// coordinate that would turn negative and drops it; at an equality optimum the
// coordinate with the most negative reduced gradient is freed, provided it
// exceeds threshold(f) in magnitude.
inline ActiveSetResult active_set(const LeastSquaresForm& g, Eigen::VectorXd w, std::size_t max_steps,
                                  const std::function<double(double)>& threshold) {
  const Eigen::Index T = w.size();
  const Eigen::MatrixXd Q = g.M.transpose() * g.M;
  const Eigen::VectorXd c = g.M.transpose() * g.r;
  std::vector<Eigen::Index> free;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (w[t] > 0.0) free.push_back(t);
  }
  ActiveSetResult out;
  for (; out.steps < max_steps; ++out.steps) {
    const Eigen::VectorXd target = equality_qp(g, Q, c, free, T);
    if (!target.allFinite()) break;
    bool interior = true;
    for (Eigen::Index t : free) {
      if (target[t] <= 0.0) interior = false;
    }
    if (interior) {
      w = target;
      const Eigen::VectorXd grad = g.gradient(w);
      const double lambda = grad.dot(w);
      // Reduced gradients below the threshold are indistinguishable from
      // rounding; entering on them makes the method cycle.
      Eigen::Index entering = -1;
      double most_negative = -threshold(g.value(w));
      for (Eigen::Index t = 0; t < T; ++t) {
        if (w[t] == 0.0 && grad[t] - lambda < most_negative) {
          most_negative = grad[t] - lambda;
          entering = t;
        }
      }
      if (entering < 0) {
        out.optimal = true;
        break;
      }
      free.push_back(entering);
      std::sort(free.begin(), free.end());
      continue;
    }
    // Ratio test towards the infeasible target.
    double step = 1.0;
    for (Eigen::Index t : free) {
      if (target[t] < w[t]) step = std::min(step, w[t] / (w[t] - target[t]));
    }
    Eigen::VectorXd next = w + step * (target - w);
    std::vector<Eigen::Index> kept;
    for (Eigen::Index t : free) {
      if (next[t] > 1e-15) {
        kept.push_back(t);
      } else {
        next[t] = 0.0;
      }
    }
    // Only a garbage target from a singular subproblem can zero every free
    // coordinate; keep the last feasible point.
    if (kept.empty() || !next.allFinite()) break;
    free = std::move(kept);
    w = next.cwiseMax(0.0);
    w /= w.sum();
  }
  out.w = std::move(w);
  return out;
}

}  // namespace detail

// Accelerated projected gradient (FISTA with objective-increase restarts)
// from the uniform point, then a primal active-set pass from the best iterate.
// Converged when the Frank-Wolfe gap is at most tol * (1 + |f|); max_iter
// bounds both phases together.
inline SolveResult solve(const SimplexQP& qp, const SolverConfig& config = {}) {
  qp.validate();
  config.validate();
  const Eigen::Index T = qp.M.cols();
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(T, 1.0 / static_cast<double>(T));

  const auto finish = [&](const Eigen::VectorXd& w, double gap, std::size_t iters, bool degenerate) {
    SolveResult out;
    out.w.assign(w.data(), w.data() + w.size());
    out.objective = (qp.r - qp.M * w).squaredNorm();
    out.gap = gap;
    out.iterations = iters;
    out.degenerate = degenerate;
    return out;
  };

  if (T == 1) return finish(uniform, 0.0, 0, false);

  const detail::LeastSquaresForm g{qp.M, qp.r};
  const double lambda = detail::power_iteration(qp.M);
  if (!(lambda > 0.0)) return finish(uniform, 0.0, 0, true);
  double lipschitz = 2.0 * lambda;

  // Gradients carry an absolute error of order eps * L, so the gap cannot be
  // resolved below that; the floor keeps badly scaled problems solvable.
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * lipschitz;
  const auto threshold = [&](double value) { return config.tol * (1.0 + std::abs(value)) + floor; };
  const auto converged = [&](double gap, double value) { return gap <= threshold(value); };

  Eigen::VectorXd w = uniform;
  double f_w = g.value(w);
  Eigen::VectorXd best = w;
  double best_f = f_w;
  double best_gap = detail::fw_gap(g.gradient(w), w);

  const std::size_t gradient_budget = std::min(config.max_iter, config.gradient_steps);
  Eigen::VectorXd y = w;
  double theta = 1.0;
  std::size_t iter = 0;
  for (bool done = converged(best_gap, best_f); !done && iter < gradient_budget; ++iter) {
    Eigen::VectorXd next = detail::project(y - g.gradient(y) / lipschitz);
    double f_next = g.value(next);
    if (f_next > f_w) {
      // Restart momentum; if a plain step from w still increases f the
      // curvature estimate is too small.
      theta = 1.0;
      next = detail::project(w - g.gradient(w) / lipschitz);
      f_next = g.value(next);
      if (f_next > f_w + 1e-14 * (1.0 + std::abs(f_w))) {
        lipschitz *= 2.0;
        y = w;
        continue;
      }
      y = next;
    } else {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      y = next + ((theta - 1.0) / theta_next) * (next - w);
      theta = theta_next;
    }
    w = std::move(next);
    f_w = f_next;

    const double gap = detail::fw_gap(g.gradient(w), w);
    if (f_w < best_f || (f_w == best_f && gap < best_gap)) {
      best = w;
      best_f = f_w;
      best_gap = gap;
    }
    done = converged(gap, f_w);
  }

  // A small gap still allows a small weight on a suboptimal coordinate; the
  // active-set pass makes the support exactly stationary.
  if (iter < config.max_iter) {
    const auto refined = detail::active_set(g, best, config.max_iter - iter, threshold);
    iter += refined.steps;
    const double f_refined = g.value(refined.w);
    const double gap_refined = detail::fw_gap(g.gradient(refined.w), refined.w);
    if (f_refined <= best_f + 1e-12 * (1.0 + std::abs(best_f))) {
      best = refined.w;
      best_f = std::min(f_refined, best_f);
      best_gap = gap_refined;
    }
  }

  if (!converged(best_gap, best_f)) {
    throw NonConvergenceError("simplex QP did not converge in " + std::to_string(config.max_iter) +
                                  " iterations (gap " + detail::format_g(best_gap) + ", objective " + detail::format_g(best_f) + ")",
                              std::vector<double>(best.data(), best.data() + best.size()), best_gap, iter);
  }
  return finish(best, best_gap, iter, false);
}

}  // namespace agboost
