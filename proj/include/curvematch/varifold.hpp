#pragma once

#include <string>
#include <vector>

#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"

namespace curvematch {

enum class RadialKind { gaussian, cauchy };
enum class ZonalKind { linear, squared, constant, binomial };

// Separable kernel k(x, u, y, v) = rho(|x-y|^2) * gamma(u.v): a positive
// radial profile with scale sigma and a zonal profile on [-1, 1].  Both
// profiles are C^1, and gamma(1) > 0 for every built-in choice.
struct VarifoldKernel {
  RadialKind radial = RadialKind::gaussian;
  ZonalKind zonal = ZonalKind::linear;
  double sigma = 1.0;

  void validate() const;

  double rho(double r2) const;
  double rho_prime(double r2) const;  // d rho / d(r^2)
  double gamma(double t) const;
  double gamma_prime(double t) const;

  // Even zonal profiles make the distance blind to orientation reversal.
  bool orientation_invariant() const {
    return zonal == ZonalKind::squared || zonal == ZonalKind::constant;
  }
};

RadialKind radial_from_name(const std::string& name);
ZonalKind zonal_from_name(const std::string& name);
std::string to_name(RadialKind k);
std::string to_name(ZonalKind k);

// Closed polygon with per-edge midpoints, lengths and unit tangents.  When
// sampled from a spline the theta-basis rows at the sample sites are kept, so
// gradients can be chained back onto the spline controls.
class PolygonalCurve {
 public:
  explicit PolygonalCurve(const Mat2X& vertices);

  int size() const { return (int)verts_.cols(); }
  const Mat2X& vertices() const { return verts_; }
  const Mat2X& midpoints() const { return mids_; }
  const Mat2X& tangents() const { return tans_; }
  const Eigen::VectorXd& lengths() const { return lens_; }

  bool has_jacobian() const { return num_controls_ > 0; }
  int num_controls() const { return num_controls_; }

  // Scatter per-vertex cotangents onto the originating spline controls.
  Mat2X chain_to_controls(const Mat2X& vertex_grad) const;

  friend PolygonalCurve sample_polygon(const SplineCurve& c, int count, double offset);

 private:
  Mat2X verts_, mids_, tans_;
  Eigen::VectorXd lens_;
  // Sampling provenance: vertex k = sum_a basis_vals_(a,k) * controls.col(wrap(first_[k]+a)).
  Eigen::Matrix<double, 4, Eigen::Dynamic> basis_vals_;
  std::vector<int> first_;
  int num_controls_ = 0;
  int degree_ = 0;
};

// Vertices c(theta_k), theta_k = offset + 2*pi*k/count.
PolygonalCurve sample_polygon(const SplineCurve& c, int count, double offset = 0.0);

double varifold_inner(const PolygonalCurve& p1, const PolygonalCurve& p2,
                      const VarifoldKernel& kernel);

// <mu1 - mu2, mu1 - mu2>, clamped at zero.
double varifold_dist_sq(const PolygonalCurve& p1, const PolygonalCurve& p2,
                        const VarifoldKernel& kernel);

// varifold_inner(p1, p2) and its gradient with respect to p1's vertices.
double varifold_inner_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                           const VarifoldKernel& kernel, Mat2X& vertex_grad);

// varifold_dist_sq and its gradient with respect to p1's vertices.
double varifold_dist_sq_vertex_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                                    const VarifoldKernel& kernel, Mat2X& vertex_grad);

// Same, chained onto p1's spline controls; p1 must carry sampling provenance.
double varifold_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                     const VarifoldKernel& kernel, Mat2X& control_grad);

// Max pairwise vertex distance of a sampled curve; feeds the default sigma.
double curve_diameter(const SplineCurve& c, int samples = 64);

}  // namespace curvematch
