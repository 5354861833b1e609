#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "curvematch/lbfgs.hpp"
#include "curvematch/metric.hpp"
#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"
#include "curvematch/varifold.hpp"

namespace curvematch {

// Orientation-preserving planar motion x -> A(angle) x + translation.
struct RigidMotion {
  double angle = 0.0;
  Vec2 translation = Vec2::Zero();

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(angle), s = std::sin(angle);
    Eigen::Matrix2d a;
    a << c, -s, s, c;
    return a;
  }
  Vec2 apply(const Vec2& x) const { return rotation() * x + translation; }
  RigidMotion inverse() const {
    RigidMotion inv;
    inv.angle = -angle;
    inv.translation = -(inv.rotation() * translation);
    return inv;
  }
};

// One resolution level of the discretization: control-net size and the
// polygon sample count for the fidelity term.
struct Level {
  int num_time = 10;
  int num_theta = 40;
  int samples = 100;

  bool operator==(const Level&) const = default;
};

struct OptimizerSettings {
  LbfgsSettings lbfgs;
  // Coarse-to-fine schedule; empty means a single solve at the working
  // resolution.  The working resolution is appended when absent.
  std::vector<Level> levels = {{5, 20, 50}};
};

struct MatchProblem {
  SplineCurve source;
  SplineCurve target;
  MetricCoefficients coeffs;
  VarifoldKernel kernel;
  double lambda = 5.0;
  bool rigid_enabled = false;
  Level resolution;
  OptimizerSettings opt;

  void validate() const;
  // Schedule ending at the working resolution, each level component-wise
  // non-decreasing and strictly finer somewhere.
  std::vector<Level> effective_levels() const;
};

struct LevelTrace {
  Level level;
  int iterations = 0;
  StopReason reason = StopReason::max_iterations;
  std::vector<double> objective_history;
  std::vector<double> grad_norm_history;
};

struct MatchResult {
  PathControlNet net;
  // Motion carrying the matched end curve onto the raw target (the target's
  // pose relative to the source).  Internally the objective aligns the target
  // with its inverse; identity when rigid matching is off.
  RigidMotion rigid;
  double energy = 0.0;
  double fidelity = 0.0;   // squared varifold distance at the end curve
  double objective = 0.0;  // energy + lambda * fidelity
  double geodesic_distance = 0.0;
  bool converged = false;
  std::vector<LevelTrace> levels;
  double wall_seconds = 0.0;
};

// The relaxed functional at one resolution level, exposed as a flat-vector
// objective for the optimizer.  Variables are net rows 2..N_t (row 1 is the
// frozen source) followed by (angle, bx, by) when rigid matching is on.
class MatchObjective {
 public:
  MatchObjective(const MatchProblem& problem, const Level& level);

  int dim() const;
  const SplineCurve& source() const { return source_; }
  const SplineCurve& target() const { return target_; }
  const SplineBasis& time_basis() const { return time_basis_; }
  const SplineBasis& theta_basis() const { return theta_basis_; }
  const PathQuadrature& quadrature() const { return quad_; }

  PathControlNet constant_net() const;
  RigidMotion initial_alignment() const;  // centroid shift when rigid is on

  Eigen::VectorXd pack(const PathControlNet& net, const RigidMotion& align) const;
  void unpack(const Eigen::VectorXd& x, PathControlNet& net, RigidMotion& align) const;

  // Objective value and gradient; +inf on a degenerate intermediate curve.
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

  double energy(const PathControlNet& net) const;
  // Fidelity of the end curve against the target aligned by `align`.
  double fidelity(const PathControlNet& net, const RigidMotion& align) const;

 private:
  const MatchProblem& problem_;
  Level level_;
  SplineBasis time_basis_, theta_basis_;
  PathQuadrature quad_;
  SplineCurve source_, target_;
  Mat2X target_verts_;  // polygon samples of the raw target at this level
};

// Objective and gradient in one call, for callers holding structured state.
double objective_and_gradient(const MatchProblem& problem, const PathControlNet& net,
                              const RigidMotion& align, std::vector<Mat2X>& net_grad,
                              double& angle_grad, Vec2& translation_grad);

MatchResult solve_match(const MatchProblem& problem);

std::vector<SplineCurve> geodesic_snapshots(const MatchResult& result,
                                            const std::vector<double>& times);

// Coarse-to-fine transfer: per-row refit in theta, then per-control least
// squares in time, with the first row replaced by the fine source controls.
PathControlNet prolong_net(const PathControlNet& coarse, const SplineBasis& fine_time,
                           const SplineBasis& fine_theta, const Mat2X& fine_source_controls);

}  // namespace curvematch
