#pragma once

#include <utility>
#include <vector>

#include "curvematch/types.hpp"

namespace curvematch {

// Univariate B-spline basis over a uniform knot grid, either periodic on
// [0, period) or clamped on [a, b] with full knot multiplicity at both ends
// (so the first and last control points are interpolated).  Degrees 1..3.
class SplineBasis {
 public:
  // Empty basis; only assignment is meaningful before one of the factories.
  SplineBasis() = default;

  static SplineBasis periodic(int degree, int num_controls, double period = two_pi);
  static SplineBasis clamped(int degree, int num_controls, double a = 0.0, double b = 1.0);

  int degree() const { return degree_; }
  int num_controls() const { return num_controls_; }
  bool is_periodic() const { return periodic_; }
  double domain_start() const { return start_; }
  double domain_end() const { return end_; }
  int num_spans() const { return periodic_ ? num_controls_ : num_controls_ - degree_; }
  double span_start(int s) const;
  double span_end(int s) const;

  // Values and derivatives (rows 0..nders) of the degree+1 basis functions
  // that are nonzero at x.  Column a belongs to control control_of(first, a).
  // For periodic bases `first` may be negative before wrapping.
  struct Local {
    int first;
    Eigen::Matrix<double, 3, 4> ders;
  };
  Local eval_local(double x, int nders) const;

  int control_of(int first, int a) const {
    int j = first + a;
    if (!periodic_) return j;
    j %= num_controls_;
    return j < 0 ? j + num_controls_ : j;
  }

  // Full row of all basis values (or a derivative order) at x; used by
  // least-squares assembly and tests, not by inner loops.
  Eigen::VectorXd dense_row(double x, int der = 0) const;

  // Greville abscissae; placing control points on a line at these parameters
  // reproduces the line exactly.
  Eigen::VectorXd greville() const;

 private:
  int degree_ = 0;
  int num_controls_ = 0;
  bool periodic_ = false;
  double start_ = 0.0, end_ = 0.0;
  std::vector<double> knots_;
};

// Closed plane curve c(theta) = sum_j controls.col(j) * C_j(theta) over a
// periodic basis.
struct SplineCurve {
  SplineBasis basis;
  Mat2X controls;

  Vec2 point(double theta) const;
  // Position and the first `nders` theta-derivatives at theta (nders <= 2).
  void jets(double theta, int nders, Vec2* out) const;
};

// Path of closed curves c(t, theta) = sum_ij rows[i].col(j) B_i(t) C_j(theta);
// time basis clamped, so rows.front() / rows.back() are the endpoint curves.
struct PathControlNet {
  SplineBasis time_basis;
  SplineBasis theta_basis;
  std::vector<Mat2X> rows;  // one 2 x num_theta_controls block per time control

  int num_time_controls() const { return time_basis.num_controls(); }
  int num_theta_controls() const { return theta_basis.num_controls(); }

  // Curve at a fixed time; endpoint rows are returned exactly at t <= 0, t >= 1.
  SplineCurve curve_at(double t) const;

  static PathControlNet constant(const SplineBasis& time_basis, const SplineCurve& c);
};

// Quadrature grid over a basis domain: a fixed Gauss rule per knot span with
// basis values and derivatives cached at every site.
struct QuadSite {
  double x;
  double weight;
  int first;
  Eigen::Matrix<double, 3, 4> b;
};

struct QuadGrid {
  std::vector<QuadSite> sites;
  int per_span = 0;
};

QuadGrid make_quad_grid(const SplineBasis& basis, int per_span, int nders);

// Combined rule for path integrals dt x dtheta.
struct PathQuadrature {
  QuadGrid time;
  QuadGrid theta;
};

PathQuadrature make_path_quadrature(const SplineBasis& time_basis, const SplineBasis& theta_basis,
                                    int time_per_span = 2, int theta_per_span = 3);

// Standard basis pair: clamped quadratic in time on [0,1], periodic cubic in
// theta on [0,2pi).  Rejects sizes below N_t = 3, N_theta = 6.
std::pair<SplineBasis, SplineBasis> make_bases(int num_time_controls, int num_theta_controls);

// First and second arc-length derivatives from parameter-space jets at one
// site.  speed = |c_theta| must be positive; callers enforce the relative
// floor before constructing.
struct ArcOps {
  double speed;
  double inv_speed;
  double tan_d2;  // c_theta . c_thetatheta

  static ArcOps at(const Vec2& c1, const Vec2& c2) {
    ArcOps o;
    o.speed = c1.norm();
    o.inv_speed = 1.0 / o.speed;
    o.tan_d2 = c1.dot(c2);
    return o;
  }

  Vec2 first(const Vec2& h1) const { return h1 * inv_speed; }
  Vec2 second(const Vec2& h1, const Vec2& h2) const {
    double is2 = inv_speed * inv_speed;
    return h2 * is2 - h1 * (tan_d2 * is2 * is2);
  }
};

// Relative speed floor: a curve is degenerate at a site when its speed drops
// below eps_rel times the mean speed over the sites examined together.
inline constexpr double speed_floor_rel = 1e-8;

}  // namespace curvematch
