#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace curvematch {

// Objective callback: value at x, gradient written into grad (same size as x).
// May return a non-finite value to mark x as out of domain.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsSettings {
  int memory = 10;
  int max_iterations = 500;
  // Below ~1e-4 relative, line-search objective differences on typical
  // matching problems drown in double rounding and no tolerance is reachable.
  double g_tol_rel = 1e-4;   // on the gradient norm, relative to the initial one
  double g_tol_abs = 1e-12;  // floor for already-converged starts
  double armijo_c1 = 1e-4;
  double curvature_c2 = 0.9;
  int max_line_search = 50;

  void validate() const;
};

enum class StopReason {
  gradient_tolerance,
  max_iterations,
  line_search_failed,
  non_finite,
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;  // accepted steps
  int evaluations = 0;
  StopReason reason = StopReason::max_iterations;
  std::vector<double> f_history;          // per accepted iterate, starting at x0
  std::vector<double> grad_norm_history;  // same indexing

  bool converged() const { return reason == StopReason::gradient_tolerance; }
};

// Two-loop-recursion L-BFGS with a weak-Wolfe bisection line search.  Every
// accepted step satisfies Armijo, so f_history is non-increasing.  A
// non-finite value at x0 stops immediately with StopReason::non_finite; a
// failed line search returns the best iterate so far, flagged.
LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsSettings& settings);

}  // namespace curvematch
