#include <doctest.h>

#include <cmath>

#include "curvematch/errors.hpp"
#include "curvematch/fit.hpp"
#include "curvematch/metric.hpp"
#include "curvematch/spline.hpp"
#include "curvematch/synthetic.hpp"
#include "oracles.hpp"

using namespace curvematch;

namespace {

SplineCurve fitted_circle(double radius, int controls) {
  return fit_spline(circle_polygon(radius, 400), controls).curve;
}

SplineCurve random_field(oracle::TestRng& rng, const SplineBasis& basis, double scale) {
  Mat2X controls(2, basis.num_controls());
  for (int j = 0; j < controls.cols(); ++j)
    controls.col(j) = Vec2(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
  return SplineCurve{basis, controls};
}

PathControlNet random_net(oracle::TestRng& rng, int nt, int nq, double wobble) {
  auto [tb, qb] = make_bases(nt, nq);
  SplineCurve base = fit_spline(oracle::wobbly_polygon(rng, 200), nq).curve;
  PathControlNet net = PathControlNet::constant(tb, base);
  for (int i = 1; i < nt; ++i)
    for (int j = 0; j < nq; ++j)
      net.rows[i].col(j) += Vec2(rng.uniform(-wobble, wobble), rng.uniform(-wobble, wobble));
  return net;
}

}  // namespace

TEST_SUITE_BEGIN("metric");

TEST_CASE("arc-length derivative algebra is exact on circle jets") {
  double radius = 1.7;
  for (double theta : {0.0, 0.9, 2.6, 5.1}) {
    Vec2 c1 = radius * Vec2(-std::sin(theta), std::cos(theta));
    Vec2 c2 = radius * Vec2(-std::cos(theta), -std::sin(theta));
    ArcOps ops = ArcOps::at(c1, c2);
    CHECK(ops.speed == doctest::Approx(radius).epsilon(1e-15));
    // The curve's own first arc-length derivative is the unit tangent; the
    // second has magnitude equal to the curvature 1/R.
    CHECK(ops.first(c1).norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ops.second(c1, c2).norm() == doctest::Approx(1.0 / radius).epsilon(1e-14));
    CHECK(ops.first(c1).dot(ops.second(c1, c2)) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("constant fields see only the zero-order term times the length") {
  SplineCurve circle = fitted_circle(1.0, 60);
  QuadGrid grid = make_quad_grid(circle.basis, 3, 2);
  SplineCurve field{circle.basis, Mat2X::Zero(2, 60)};
  for (int j = 0; j < 60; ++j) field.controls.col(j) = Vec2(0.8, -0.6);
  MetricCoefficients co{2.0, 3.0, 5.0};
  double inner = metric_inner(circle, field.controls, field.controls, co, grid);
  CHECK(inner == doctest::Approx(2.0 * two_pi * 1.0).epsilon(1e-6));
}

TEST_CASE("the curve paired with itself sees all three terms on the unit circle") {
  SplineCurve circle = fitted_circle(1.0, 80);
  QuadGrid grid = make_quad_grid(circle.basis, 3, 2);
  MetricCoefficients co{1.0, 1.0, 1.0};
  // |c| = |D_s c| = |D_s^2 c| = 1 pointwise on the unit circle.
  double inner = metric_inner(circle, circle.controls, circle.controls, co, grid);
  CHECK(inner == doctest::Approx(3.0 * two_pi).epsilon(1e-6));
}

TEST_CASE("inner products match a dense trapezoid oracle on random data") {
  oracle::TestRng rng(41);
  SplineCurve curve = fit_spline(oracle::wobbly_polygon(rng, 240), 20).curve;
  SplineCurve h = random_field(rng, curve.basis, 0.7);
  SplineCurve k = random_field(rng, curve.basis, 0.7);
  // 8 points per span: squares of spline fields integrate exactly, so the
  // only quadrature error left is the analytic speed factor.
  QuadGrid grid = make_quad_grid(curve.basis, 8, 2);
  MetricCoefficients co{0.7, 1.3, 2.1};
  double lib = metric_inner(curve, h.controls, k.controls, co, grid);
  oracle::CurveEval ce{[&](double q) { return curve.point(q); }};
  oracle::CurveEval he{[&](double q) { return h.point(q); }};
  oracle::CurveEval ke{[&](double q) { return k.point(q); }};
  // The trapezoid rule is only second order here (spline integrands have
  // derivative kinks), so the reference grid must be fine.
  double ref = oracle::metric_inner_trapezoid(ce, he, ke, co, 16000);
  CHECK(lib == doctest::Approx(ref).epsilon(2e-6));
}

TEST_CASE("each reduced metric matches its own direct integral") {
  oracle::TestRng rng(43);
  SplineCurve curve = fit_spline(oracle::wobbly_polygon(rng, 240), 18).curve;
  SplineCurve h = random_field(rng, curve.basis, 0.5);
  QuadGrid grid = make_quad_grid(curve.basis, 8, 2);
  oracle::CurveEval ce{[&](double q) { return curve.point(q); }};
  oracle::CurveEval he{[&](double q) { return h.point(q); }};

  // Zero order: integral of |h|^2 ds.
  double m = 4000, acc0 = 0.0, acc1 = 0.0, acc2 = 0.0;
  for (int i = 0; i < m; ++i) {
    double q = two_pi * i / m;
    double speed = ce.d1(q).norm();
    double tan_d2 = ce.d1(q).dot(ce.d2(q));
    Vec2 dsh = he.d1(q) / speed;
    Vec2 ds2h = he.d2(q) / (speed * speed) - he.d1(q) * tan_d2 / std::pow(speed, 4);
    acc0 += he.point(q).squaredNorm() * speed * (two_pi / m);
    acc1 += dsh.squaredNorm() * speed * (two_pi / m);
    acc2 += ds2h.squaredNorm() * speed * (two_pi / m);
  }
  CHECK(metric_inner(curve, h.controls, h.controls, {1, 0, 0}, grid) == doctest::Approx(acc0).epsilon(1e-5));
  CHECK(metric_inner(curve, h.controls, h.controls, {1e-12, 1, 0}, grid) ==
        doctest::Approx(acc1).epsilon(1e-4));
  CHECK(metric_inner(curve, h.controls, h.controls, {1e-12, 0, 1}, grid) ==
        doctest::Approx(acc2).epsilon(1e-4));
}

TEST_CASE("inner products are translation invariant and rotation equivariant") {
  oracle::TestRng rng(47);
  SplineCurve curve = fit_spline(oracle::wobbly_polygon(rng, 200), 16).curve;
  SplineCurve h = random_field(rng, curve.basis, 0.6);
  SplineCurve k = random_field(rng, curve.basis, 0.6);
  QuadGrid grid = make_quad_grid(curve.basis, 3, 2);
  MetricCoefficients co{1.0, 2.0, 0.5};
  double base = metric_inner(curve, h.controls, k.controls, co, grid);

  SplineCurve moved = curve;
  moved.controls.colwise() += Vec2(4.2, -1.1);
  CHECK(metric_inner(moved, h.controls, k.controls, co, grid) == doctest::Approx(base).epsilon(1e-12));

  double ang = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  SplineCurve rc = curve, rh = h, rk = k;
  rc.controls = rot * rc.controls;
  rh.controls = rot * rh.controls;
  rk.controls = rot * rk.controls;
  CHECK(metric_inner(rc, rh.controls, rk.controls, co, grid) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("path energy matches a dense trapezoid oracle") {
  oracle::TestRng rng(53);
  PathControlNet net = random_net(rng, 10, 12, 0.15);
  MetricCoefficients co{1.0, 1.0, 1.0};
  PathQuadrature quad = make_path_quadrature(net.time_basis, net.theta_basis);
  double lib = path_energy(net, co, quad);
  double ref = oracle::path_energy_trapezoid(net, co, 60, 1500);
  CHECK(lib == doctest::Approx(ref).epsilon(2e-4));
}

TEST_CASE("energy report splits the total across time sites") {
  oracle::TestRng rng(59);
  PathControlNet net = random_net(rng, 6, 10, 0.2);
  MetricCoefficients co{1.0, 1.0, 1.0};
  PathQuadrature quad = make_path_quadrature(net.time_basis, net.theta_basis);
  EnergyReport report = path_energy_report(net, co, quad);
  double sum = 0.0;
  for (double c : report.contributions) {
    CHECK(c >= 0.0);
    sum += c;
  }
  CHECK(sum == doctest::Approx(report.energy).epsilon(1e-12));
  CHECK(report.contributions.size() == quad.time.sites.size());
}

TEST_CASE("a constant-in-time path has exactly zero energy") {
  oracle::TestRng rng(61);
  auto [tb, qb] = make_bases(7, 14);
  SplineCurve base = fit_spline(oracle::wobbly_polygon(rng, 200), 14).curve;
  PathControlNet net = PathControlNet::constant(tb, base);
  PathQuadrature quad = make_path_quadrature(tb, qb);
  // Identical rows cancel through the derivative row up to rounding in the
  // basis values themselves.
  CHECK(path_energy(net, {1, 1, 1}, quad) < 1e-24);
  CHECK(path_length(net, {1, 1, 1}, quad) < 1e-12);
}

TEST_CASE("squared path length never exceeds the energy") {
  oracle::TestRng rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    PathControlNet net = random_net(rng, 5, 10, 0.3);
    PathQuadrature quad = make_path_quadrature(net.time_basis, net.theta_basis);
    MetricCoefficients co{1.0, 1.0, 1.0};
    double energy = path_energy(net, co, quad);
    double len = path_length(net, co, quad);
    CHECK(len * len <= energy * (1 + 1e-12));
  }
}

TEST_CASE("the energy gradient matches central finite differences") {
  oracle::TestRng rng(71);
  PathControlNet net = random_net(rng, 4, 8, 0.2);
  MetricCoefficients co{0.9, 1.4, 0.8};
  PathQuadrature quad = make_path_quadrature(net.time_basis, net.theta_basis);
  int nt = net.num_time_controls(), nq = net.num_theta_controls();

  auto pack = [&](const PathControlNet& n) {
    Eigen::VectorXd x(2 * nt * nq);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nq; ++j) {
        x[2 * (i * nq + j)] = n.rows[i](0, j);
        x[2 * (i * nq + j) + 1] = n.rows[i](1, j);
      }
    return x;
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    PathControlNet n = net;
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nq; ++j)
        n.rows[i].col(j) = Vec2(x[2 * (i * nq + j)], x[2 * (i * nq + j) + 1]);
    return n;
  };

  std::vector<Mat2X> grad;
  double value = path_energy_gradient(net, co, quad, grad);
  CHECK(value == doctest::Approx(path_energy(net, co, quad)).epsilon(1e-13));

  Eigen::VectorXd analytic(2 * nt * nq);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nq; ++j) {
      analytic[2 * (i * nq + j)] = grad[i](0, j);
      analytic[2 * (i * nq + j) + 1] = grad[i](1, j);
    }
  Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& x) { return path_energy(unpack(x), co, quad); }, pack(net),
      1e-6);
  CHECK((analytic - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
}

TEST_CASE("energy is invariant under rigid motions applied to the whole path") {
  oracle::TestRng rng(73);
  PathControlNet net = random_net(rng, 5, 10, 0.25);
  PathQuadrature quad = make_path_quadrature(net.time_basis, net.theta_basis);
  MetricCoefficients co{1.0, 1.0, 1.0};
  double base = path_energy(net, co, quad);

  double ang = -0.41;
  Eigen::Matrix2d rot;
  rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  PathControlNet moved = net;
  for (Mat2X& row : moved.rows) row = (rot * row).colwise() + Vec2(1.5, -2.0);
  CHECK(path_energy(moved, co, quad) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("a curve with a locally collapsed stretch raises the degeneracy error") {
  // Four equal consecutive controls of a periodic cubic pin the curve to one
  // point on a whole span: zero speed there, healthy speed elsewhere, so the
  // relative floor trips.
  auto [tb, qb] = make_bases(4, 8);
  Mat2X controls(2, 8);
  for (int j = 0; j < 8; ++j)
    controls.col(j) = Vec2(std::cos(two_pi * j / 8), std::sin(two_pi * j / 8));
  for (int j = 0; j < 4; ++j) controls.col(j) = Vec2(1.0, 0.0);
  SplineCurve cusp{qb, controls};
  QuadGrid grid = make_quad_grid(qb, 3, 2);
  CHECK_THROWS_AS(metric_inner(cusp, controls, controls, {1, 1, 1}, grid), DegenerateCurve);

  PathControlNet net = PathControlNet::constant(tb, cusp);
  PathQuadrature quad = make_path_quadrature(tb, qb);
  CHECK_THROWS_AS(path_energy(net, {1, 1, 1}, quad), DegenerateCurve);
  try {
    path_energy(net, {1, 1, 1}, quad);
  } catch (const DegenerateCurve& e) {
    CHECK(e.t > 0.0);
    CHECK(e.t < 1.0);
  }
}

TEST_CASE("coefficient validation rejects non-positive leading weight") {
  CHECK_THROWS_AS((MetricCoefficients{0.0, 1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((MetricCoefficients{1, -0.5, 1}.validate()), std::invalid_argument);
  CHECK_NOTHROW((MetricCoefficients{1, 0, 0}.validate()));
}

TEST_SUITE_END();
