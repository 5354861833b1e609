#include "curvematch/varifold.hpp"

#include <cmath>
#include <stdexcept>

#include "curvematch/errors.hpp"

namespace curvematch {

void VarifoldKernel::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("varifold kernel: sigma must be positive");
}

double VarifoldKernel::rho(double r2) const {
  const double s2 = sigma * sigma;
  switch (radial) {
    case RadialKind::gaussian: return std::exp(-r2 / s2);
    case RadialKind::cauchy: return 1.0 / (1.0 + r2 / s2);
  }
  return 0.0;
}

double VarifoldKernel::rho_prime(double r2) const {
  const double s2 = sigma * sigma;
  switch (radial) {
    case RadialKind::gaussian: return -std::exp(-r2 / s2) / s2;
    case RadialKind::cauchy: {
      const double d = 1.0 + r2 / s2;
      return -1.0 / (d * d * s2);
    }
  }
  return 0.0;
}

double VarifoldKernel::gamma(double t) const {
  switch (zonal) {
    case ZonalKind::linear: return t;
    case ZonalKind::squared: return t * t;
    case ZonalKind::constant: return 1.0;
    case ZonalKind::binomial: return 0.25 * (1.0 + t) * (1.0 + t);
  }
  return 0.0;
}

double VarifoldKernel::gamma_prime(double t) const {
  switch (zonal) {
    case ZonalKind::linear: return 1.0;
    case ZonalKind::squared: return 2.0 * t;
    case ZonalKind::constant: return 0.0;
    case ZonalKind::binomial: return 0.5 * (1.0 + t);
  }
  return 0.0;
}

RadialKind radial_from_name(const std::string& name) {
  if (name == "gaussian") return RadialKind::gaussian;
  if (name == "cauchy") return RadialKind::cauchy;
  throw std::invalid_argument("unknown radial kernel: " + name);
}

ZonalKind zonal_from_name(const std::string& name) {
  if (name == "linear") return ZonalKind::linear;
  if (name == "squared") return ZonalKind::squared;
  if (name == "constant") return ZonalKind::constant;
  if (name == "binomial") return ZonalKind::binomial;
  throw std::invalid_argument("unknown zonal kernel: " + name);
}

std::string to_name(RadialKind k) { return k == RadialKind::gaussian ? "gaussian" : "cauchy"; }

std::string to_name(ZonalKind k) {
  switch (k) {
    case ZonalKind::linear: return "linear";
    case ZonalKind::squared: return "squared";
    case ZonalKind::constant: return "constant";
    case ZonalKind::binomial: return "binomial";
  }
  return "linear";
}

PolygonalCurve::PolygonalCurve(const Mat2X& vertices) : verts_(vertices) {
  const int p = (int)verts_.cols();
  if (p < 3) throw std::invalid_argument("PolygonalCurve: need at least three vertices");
  mids_.resize(2, p);
  tans_.resize(2, p);
  lens_.resize(p);
  for (int k = 0; k < p; ++k) {
    const Vec2 a = verts_.col(k), b = verts_.col((k + 1) % p);
    const Vec2 e = b - a;
    const double len = e.norm();
    if (!(len > 0.0)) throw ZeroEdge(k, "PolygonalCurve: zero-length edge");
    mids_.col(k) = 0.5 * (a + b);
    tans_.col(k) = e / len;
    lens_[k] = len;
  }
}

PolygonalCurve sample_polygon(const SplineCurve& c, int count, double offset) {
  if (count < 3) throw std::invalid_argument("sample_polygon: need at least three samples");
  const int degree = c.basis.degree();
  Mat2X verts(2, count);
  Eigen::Matrix<double, 4, Eigen::Dynamic> vals(4, count);
  vals.setZero();
  std::vector<int> first(count);
  for (int k = 0; k < count; ++k) {
    const double theta = offset + two_pi * k / count;
    SplineBasis::Local loc = c.basis.eval_local(theta, 0);
    first[k] = loc.first;
    Vec2 v = Vec2::Zero();
    for (int a = 0; a <= degree; ++a) {
      vals(a, k) = loc.ders(0, a);
      v += loc.ders(0, a) * c.controls.col(c.basis.control_of(loc.first, a));
    }
    verts.col(k) = v;
  }
  PolygonalCurve poly(verts);
  poly.basis_vals_ = std::move(vals);
  poly.first_ = std::move(first);
  poly.num_controls_ = c.basis.num_controls();
  poly.degree_ = degree;
  return poly;
}

Mat2X PolygonalCurve::chain_to_controls(const Mat2X& vertex_grad) const {
  if (!has_jacobian())
    throw std::logic_error("PolygonalCurve: no sampling provenance to chain through");
  Mat2X g = Mat2X::Zero(2, num_controls_);
  const int p = size();
  for (int k = 0; k < p; ++k) {
    for (int a = 0; a <= degree_; ++a) {
      int j = (first_[k] + a) % num_controls_;
      if (j < 0) j += num_controls_;
      g.col(j) += basis_vals_(a, k) * vertex_grad.col(k);
    }
  }
  return g;
}

double varifold_inner(const PolygonalCurve& p1, const PolygonalCurve& p2,
                      const VarifoldKernel& kernel) {
  kernel.validate();
  const int n1 = p1.size(), n2 = p2.size();
  const Mat2X& x1 = p1.midpoints();
  const Mat2X& x2 = p2.midpoints();
  const Mat2X& t1 = p1.tangents();
  const Mat2X& t2 = p2.tangents();
  const Eigen::VectorXd& l1 = p1.lengths();
  const Eigen::VectorXd& l2 = p2.lengths();

  // Accumulation order matches varifold_inner_grad exactly, so self terms
  // computed through either path cancel bit-for-bit in the squared distance.
  double acc = 0.0;
  for (int k = 0; k < n1; ++k) {
    for (int l = 0; l < n2; ++l) {
      const double r2 = (x1.col(k) - x2.col(l)).squaredNorm();
      acc += l1[k] * l2[l] * kernel.gamma(t1.col(k).dot(t2.col(l))) * kernel.rho(r2);
    }
  }
  return acc;
}

double varifold_inner_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                           const VarifoldKernel& kernel, Mat2X& vertex_grad) {
  kernel.validate();
  const int n1 = p1.size(), n2 = p2.size();
  const Mat2X& x1 = p1.midpoints();
  const Mat2X& x2 = p2.midpoints();
  const Mat2X& t1 = p1.tangents();
  const Mat2X& t2 = p2.tangents();
  const Eigen::VectorXd& l1 = p1.lengths();
  const Eigen::VectorXd& l2 = p2.lengths();

  double acc = 0.0;
  vertex_grad = Mat2X::Zero(2, n1);
  for (int k = 0; k < n1; ++k) {
    Vec2 gx = Vec2::Zero();  // d/d midpoint x1_k
    Vec2 ge = Vec2::Zero();  // d/d edge e1_k
    const Vec2 u = t1.col(k);
    for (int l = 0; l < n2; ++l) {
      const Vec2 diff = x1.col(k) - x2.col(l);
      const Vec2 w = t2.col(l);
      const double dot = u.dot(w);
      const double g = kernel.gamma(dot);
      const double gp = kernel.gamma_prime(dot);
      const double r = kernel.rho(diff.squaredNorm());
      const double rp = kernel.rho_prime(diff.squaredNorm());
      acc += l1[k] * l2[l] * g * r;
      gx += (l1[k] * l2[l] * g * rp * 2.0) * diff;
      // |e| g(u.w) has edge derivative g*u + gp*(w - (u.w) u); r scales both.
      ge += (l2[l] * r) * (g * u + gp * (w - dot * u));
    }
    // Midpoint and edge of segment k touch vertices k and k+1.
    const int kn = (k + 1) % n1;
    vertex_grad.col(k) += 0.5 * gx - ge;
    vertex_grad.col(kn) += 0.5 * gx + ge;
  }
  return acc;
}

double varifold_dist_sq(const PolygonalCurve& p1, const PolygonalCurve& p2,
                        const VarifoldKernel& kernel) {
  const double d2 = varifold_inner(p1, p1, kernel) - 2.0 * varifold_inner(p1, p2, kernel) +
                    varifold_inner(p2, p2, kernel);
  return d2 > 0.0 ? d2 : 0.0;
}

double varifold_dist_sq_vertex_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                                    const VarifoldKernel& kernel, Mat2X& vertex_grad) {
  Mat2X g_self, g_cross;
  const double self1 = varifold_inner_grad(p1, p1, kernel, g_self);
  const double cross = varifold_inner_grad(p1, p2, kernel, g_cross);
  const double self2 = varifold_inner(p2, p2, kernel);
  // <p1,p1> sees p1 in both slots; by symmetry of the kernel the total
  // derivative is twice the one-slot gradient.
  vertex_grad = 2.0 * g_self - 2.0 * g_cross;
  const double d2 = self1 - 2.0 * cross + self2;
  return d2 > 0.0 ? d2 : 0.0;
}

double varifold_grad(const PolygonalCurve& p1, const PolygonalCurve& p2,
                     const VarifoldKernel& kernel, Mat2X& control_grad) {
  Mat2X vg;
  const double d2 = varifold_dist_sq_vertex_grad(p1, p2, kernel, vg);
  control_grad = p1.chain_to_controls(vg);
  return d2;
}

double curve_diameter(const SplineCurve& c, int samples) {
  Mat2X pts(2, samples);
  for (int k = 0; k < samples; ++k) pts.col(k) = c.point(two_pi * k / samples);
  double best = 0.0;
  for (int i = 0; i < samples; ++i)
    for (int j = i + 1; j < samples; ++j)
      best = std::max(best, (pts.col(i) - pts.col(j)).norm());
  return best;
}

}  // namespace curvematch
