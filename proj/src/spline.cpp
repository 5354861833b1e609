#include "curvematch/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curvematch/gauss.hpp"

namespace curvematch {

namespace {

// Basis values and derivatives on one knot span (The NURBS Book, A2.3).
// K is the knot array, S the span with K[S] <= u < K[S+1], p the degree.
// out(k, j) receives the k-th derivative of the j-th nonzero function.
void ders_basis(const std::vector<double>& K, int S, double u, int p, int nders,
                Eigen::Matrix<double, 3, 4>& out) {
  double ndu[4][4], left[4], right[4], a[2][4];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - K[S + 1 - j];
    right[j] = K[S + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  out.setZero();
  for (int j = 0; j <= p; ++j) out(0, j) = ndu[j][p];

  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nders; ++k) {
      double d = 0.0;
      int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      int j1 = (rk >= -1) ? 1 : -rk;
      int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= nders; ++k) {
    for (int j = 0; j <= p; ++j) out(k, j) *= fac;
    fac *= (p - k);
  }
}

}  // namespace

SplineBasis SplineBasis::periodic(int degree, int num_controls, double period) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("SplineBasis: degree must be 1..3");
  if (num_controls < degree + 1)
    throw std::invalid_argument("SplineBasis: need more controls than the degree");
  if (!(period > 0.0)) throw std::invalid_argument("SplineBasis: period must be positive");

  SplineBasis b;
  b.degree_ = degree;
  b.num_controls_ = num_controls;
  b.periodic_ = true;
  b.start_ = 0.0;
  b.end_ = period;
  const double h = period / num_controls;
  b.knots_.resize(num_controls + 2 * degree + 1);
  for (int m = 0; m < (int)b.knots_.size(); ++m) b.knots_[m] = (m - degree) * h;
  return b;
}

SplineBasis SplineBasis::clamped(int degree, int num_controls, double a, double bnd) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("SplineBasis: degree must be 1..3");
  if (num_controls < degree + 1)
    throw std::invalid_argument("SplineBasis: need at least degree+1 controls");
  if (!(bnd > a)) throw std::invalid_argument("SplineBasis: empty domain");

  SplineBasis b;
  b.degree_ = degree;
  b.num_controls_ = num_controls;
  b.periodic_ = false;
  b.start_ = a;
  b.end_ = bnd;
  const int spans = num_controls - degree;
  const double h = (bnd - a) / spans;
  b.knots_.resize(num_controls + degree + 1);
  for (int m = 0; m <= degree; ++m) b.knots_[m] = a;
  for (int m = 1; m < spans; ++m) b.knots_[degree + m] = a + m * h;
  for (int m = 0; m <= degree; ++m) b.knots_[num_controls + m] = bnd;
  return b;
}

double SplineBasis::span_start(int s) const { return knots_[s + degree_]; }

double SplineBasis::span_end(int s) const { return knots_[s + degree_ + 1]; }

SplineBasis::Local SplineBasis::eval_local(double x, int nders) const {
  if (nders < 0 || nders > 2 || nders > degree_)
    throw std::invalid_argument("SplineBasis: derivative order out of range");

  double u = x;
  int span;  // span index in 0..num_spans-1
  if (periodic_) {
    const double period = end_ - start_;
    u -= period * std::floor(u / period);
    const double h = period / num_controls_;
    span = std::min((int)(u / h), num_controls_ - 1);
    // u may round onto the next knot; keep the pair (span, u) consistent.
    if (u < knots_[span + degree_]) --span;
    if (u >= knots_[span + degree_ + 1]) ++span;
  } else {
    u = std::clamp(u, start_, end_);
    const int spans = num_spans();
    const double h = (end_ - start_) / spans;
    span = std::min((int)((u - start_) / h), spans - 1);
    if (u < knots_[span + degree_]) --span;
    if (span < spans - 1 && u >= knots_[span + degree_ + 1]) ++span;
  }

  Local loc;
  // Nonzero functions at span s are s-p..s for periodic bases (global index
  // is the array index minus the degree) and s..s+p array functions clamped.
  loc.first = periodic_ ? span - degree_ : span;
  ders_basis(knots_, span + degree_, u, degree_, nders, loc.ders);
  return loc;
}

Eigen::VectorXd SplineBasis::dense_row(double x, int der) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(num_controls_);
  Local loc = eval_local(x, der);
  for (int a = 0; a <= degree_; ++a) row[control_of(loc.first, a)] += loc.ders(der, a);
  return row;
}

Eigen::VectorXd SplineBasis::greville() const {
  Eigen::VectorXd g(num_controls_);
  // Function j spans knots_[j+off .. j+off+p+1] with off = p for periodic
  // storage; the Greville point is the mean of the p interior knots.
  const int off = periodic_ ? degree_ : 0;
  for (int j = 0; j < num_controls_; ++j) {
    double s = 0.0;
    for (int m = 1; m <= degree_; ++m) s += knots_[j + off + m];
    g[j] = s / degree_;
  }
  return g;
}

Vec2 SplineCurve::point(double theta) const {
  SplineBasis::Local loc = basis.eval_local(theta, 0);
  Vec2 p = Vec2::Zero();
  for (int a = 0; a <= basis.degree(); ++a)
    p += loc.ders(0, a) * controls.col(basis.control_of(loc.first, a));
  return p;
}

void SplineCurve::jets(double theta, int nders, Vec2* out) const {
  SplineBasis::Local loc = basis.eval_local(theta, nders);
  for (int k = 0; k <= nders; ++k) out[k].setZero();
  for (int a = 0; a <= basis.degree(); ++a) {
    const auto col = controls.col(basis.control_of(loc.first, a));
    for (int k = 0; k <= nders; ++k) out[k] += loc.ders(k, a) * col;
  }
}

SplineCurve PathControlNet::curve_at(double t) const {
  if (t <= time_basis.domain_start()) return {theta_basis, rows.front()};
  if (t >= time_basis.domain_end()) return {theta_basis, rows.back()};
  SplineBasis::Local loc = time_basis.eval_local(t, 0);
  Mat2X c = Mat2X::Zero(2, num_theta_controls());
  for (int a = 0; a <= time_basis.degree(); ++a)
    c += loc.ders(0, a) * rows[time_basis.control_of(loc.first, a)];
  return {theta_basis, c};
}

PathControlNet PathControlNet::constant(const SplineBasis& time_basis, const SplineCurve& c) {
  PathControlNet net;
  net.time_basis = time_basis;
  net.theta_basis = c.basis;
  net.rows.assign(time_basis.num_controls(), c.controls);
  return net;
}

QuadGrid make_quad_grid(const SplineBasis& basis, int per_span, int nders) {
  if (per_span < 1) throw std::invalid_argument("make_quad_grid: need at least one point per span");
  QuadGrid grid;
  grid.per_span = per_span;
  GaussRule ref = gauss_legendre(per_span, 0.0, 1.0);
  grid.sites.reserve((size_t)basis.num_spans() * per_span);
  for (int s = 0; s < basis.num_spans(); ++s) {
    const double a = basis.span_start(s), b = basis.span_end(s);
    const double len = b - a;
    for (int q = 0; q < per_span; ++q) {
      QuadSite site;
      site.x = a + ref.x[q] * len;
      site.weight = ref.w[q] * len;
      SplineBasis::Local loc = basis.eval_local(site.x, nders);
      site.first = loc.first;
      site.b = loc.ders;
      grid.sites.push_back(site);
    }
  }
  return grid;
}

PathQuadrature make_path_quadrature(const SplineBasis& time_basis, const SplineBasis& theta_basis,
                                    int time_per_span, int theta_per_span) {
  PathQuadrature q;
  q.time = make_quad_grid(time_basis, time_per_span, 1);
  q.theta = make_quad_grid(theta_basis, theta_per_span, 2);
  return q;
}

std::pair<SplineBasis, SplineBasis> make_bases(int num_time_controls, int num_theta_controls) {
  if (num_time_controls < 3)
    throw std::invalid_argument("make_bases: need at least 3 time controls");
  if (num_theta_controls < 6)
    throw std::invalid_argument("make_bases: need at least 6 theta controls");
  return {SplineBasis::clamped(2, num_time_controls), SplineBasis::periodic(3, num_theta_controls)};
}

}  // namespace curvematch
