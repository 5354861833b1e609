#include "curvematch/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace curvematch {

void LbfgsSettings::validate() const {
  if (memory < 1) throw std::invalid_argument("lbfgs: memory must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("lbfgs: max_iterations must be >= 0");
  if (!(armijo_c1 > 0.0 && armijo_c1 < curvature_c2 && curvature_c2 < 1.0))
    throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");
}

namespace {

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

// d = -H g through the stored curvature pairs; H0 = gamma I from the newest pair.
Eigen::VectorXd two_loop(const std::deque<Pair>& mem, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = -g;
  std::vector<double> alpha(mem.size());
  for (int i = (int)mem.size() - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const Pair& last = mem.back();
    q *= last.s.dot(last.y) / last.y.dot(last.y);
  }
  for (size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsSettings& settings) {
  settings.validate();
  const double inf = std::numeric_limits<double>::infinity();

  LbfgsResult res;
  res.x = x0;
  Eigen::VectorXd g(x0.size());
  res.f = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !g.allFinite()) {
    res.reason = StopReason::non_finite;
    res.grad_norm = inf;
    return res;
  }
  res.grad_norm = g.norm();
  res.f_history.push_back(res.f);
  res.grad_norm_history.push_back(res.grad_norm);

  const double tol = std::max(settings.g_tol_abs, settings.g_tol_rel * res.grad_norm);

  std::deque<Pair> mem;
  Eigen::VectorXd g_new(x0.size());

  while (true) {
    if (res.grad_norm <= tol) {
      res.reason = StopReason::gradient_tolerance;
      return res;
    }
    if (res.iterations >= settings.max_iterations) {
      res.reason = StopReason::max_iterations;
      return res;
    }

    Eigen::VectorXd d = two_loop(mem, g);
    double dg = d.dot(g);
    if (!(dg < 0.0) || !d.allFinite()) {
      // Curvature memory produced a non-descent direction; restart from steepest descent.
      mem.clear();
      d = -g;
      dg = -res.grad_norm * res.grad_norm;
    }

    // Weak-Wolfe line search by bisection with doubling (Lewis-Overton style).
    double lo = 0.0, hi = inf;
    double alpha = mem.empty() && res.iterations == 0 ? 1.0 / std::max(1.0, res.grad_norm) : 1.0;
    bool accepted = false;
    double f_new = res.f;
    for (int ls = 0; ls < settings.max_line_search; ++ls) {
      Eigen::VectorXd x_try = res.x + alpha * d;
      f_new = f(x_try, g_new);
      ++res.evaluations;
      if (!std::isfinite(f_new) || !g_new.allFinite() ||
          f_new > res.f + settings.armijo_c1 * alpha * dg) {
        hi = alpha;
        alpha = 0.5 * (lo + hi);
      } else if (g_new.dot(d) < settings.curvature_c2 * dg) {
        lo = alpha;
        alpha = std::isinf(hi) ? 2.0 * alpha : 0.5 * (lo + hi);
      } else {
        res.x = std::move(x_try);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.reason = StopReason::line_search_failed;
      return res;  // res.x is the best iterate: accepted steps only ever decrease f
    }

    Eigen::VectorXd s = alpha * d;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if ((int)mem.size() > settings.memory) mem.pop_front();
    }

    res.f = f_new;
    g = g_new;
    res.grad_norm = g.norm();
    ++res.iterations;
    res.f_history.push_back(res.f);
    res.grad_norm_history.push_back(res.grad_norm);
  }
}

}  // namespace curvematch
