#include <doctest.h>

#include <cmath>

#include "curvematch/errors.hpp"
#include "curvematch/fit.hpp"
#include "curvematch/matcher.hpp"
#include "curvematch/synthetic.hpp"
#include "oracles.hpp"

using namespace curvematch;

namespace {

MatchProblem small_problem(const SplineCurve& source, const SplineCurve& target) {
  MatchProblem p;
  p.source = source;
  p.target = target;
  p.coeffs = {1.0, 1.0, 1.0};
  p.kernel = {RadialKind::gaussian, ZonalKind::linear, 0.6};
  p.lambda = 5.0;
  p.resolution = {4, 10, 24};
  p.opt.levels = {};
  p.opt.lbfgs.max_iterations = 150;
  p.opt.lbfgs.g_tol_rel = 1e-6;
  p.opt.lbfgs.g_tol_abs = 1e-10;
  return p;
}

SplineCurve fitted_circle(double radius, int controls, const Vec2& center = Vec2::Zero()) {
  return fit_spline(circle_polygon(radius, 240, center), controls).curve;
}

Eigen::Matrix2d rot2(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("matcher");

TEST_CASE("identical curves sit at an exact stationary zero of the objective") {
  SplineCurve circle = fitted_circle(1.0, 10);
  MatchProblem p = small_problem(circle, circle);
  MatchObjective obj(p, p.resolution);
  Eigen::VectorXd x = obj.pack(obj.constant_net(), obj.initial_alignment());
  Eigen::VectorXd grad(x.size());
  double value = obj.eval(x, grad);
  CHECK(value < 1e-20);
  CHECK(grad.norm() < 1e-10);
}

TEST_CASE("the packed gradient matches finite differences, rigid included") {
  oracle::TestRng rng(131);
  SplineCurve source = fit_spline(oracle::wobbly_polygon(rng, 150), 8).curve;
  SplineCurve target = fit_spline(oracle::wobbly_polygon(rng, 150, 1.2), 8).curve;
  MatchProblem p = small_problem(source, target);
  p.resolution = {4, 8, 16};
  for (bool rigid : {false, true}) {
    p.rigid_enabled = rigid;
    MatchObjective obj(p, p.resolution);
    Eigen::VectorXd x = obj.pack(obj.constant_net(), obj.initial_alignment());
    // Step off the stationary-ish start so nothing cancels by symmetry.
    for (int i = 0; i < x.size(); ++i) x[i] += 0.05 * std::sin(3.7 * i + 0.4);
    Eigen::VectorXd grad(x.size());
    obj.eval(x, grad);
    Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& y) {
          Eigen::VectorXd g(y.size());
          return obj.eval(y, g);
        },
        x, 1e-6);
    CHECK((grad - fd).norm() < 2e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("the objective splits as energy plus lambda times fidelity") {
  oracle::TestRng rng(137);
  SplineCurve source = fit_spline(oracle::wobbly_polygon(rng, 150), 8).curve;
  SplineCurve target = fit_spline(oracle::wobbly_polygon(rng, 150, 1.15), 8).curve;
  MatchProblem p = small_problem(source, target);
  MatchObjective obj(p, p.resolution);
  Eigen::VectorXd x = obj.pack(obj.constant_net(), obj.initial_alignment());
  for (int i = 0; i < x.size(); ++i) x[i] += 0.04 * std::cos(2.9 * i);

  PathControlNet net = obj.constant_net();
  RigidMotion align;
  obj.unpack(x, net, align);
  Eigen::VectorXd grad(x.size());
  double value = obj.eval(x, grad);
  double split = obj.energy(net) + p.lambda * obj.fidelity(net, align);
  CHECK(value == doctest::Approx(split).epsilon(1e-12));

  MatchProblem p2 = p;
  p2.lambda = 11.0;
  MatchObjective obj2(p2, p2.resolution);
  double value2 = obj2.eval(x, grad);
  CHECK(value2 - value == doctest::Approx(6.0 * obj.fidelity(net, align)).epsilon(1e-9));
}

TEST_CASE("solving a self match converges immediately to the trivial path") {
  SplineCurve circle = fitted_circle(1.0, 10);
  MatchProblem p = small_problem(circle, circle);
  MatchResult res = solve_match(p);
  CHECK(res.converged);
  CHECK(res.objective < 1e-8);
  CHECK(res.energy < 1e-8);
  CHECK(res.geodesic_distance < 1e-4);
  REQUIRE(!res.levels.empty());
  CHECK(res.levels.back().iterations <= 1);
  // Identity rigid report when rigid matching is off.
  CHECK(res.rigid.angle == 0.0);
  CHECK(res.rigid.translation == Vec2::Zero());
}

TEST_CASE("rigid matching recovers a pure translation of the same shape") {
  SplineCurve circle = fitted_circle(1.0, 12);
  SplineCurve moved = circle;
  moved.controls.colwise() += Vec2(3.0, 0.0);
  MatchProblem p = small_problem(circle, moved);
  p.rigid_enabled = true;
  p.kernel.sigma = 0.5;
  MatchResult res = solve_match(p);
  CHECK(res.objective < 1e-6);
  CHECK((res.rigid.translation - Vec2(3.0, 0.0)).norm() < 1e-3);
  // The deformation itself stays trivial: the path barely moves.
  CHECK(res.energy < 1e-6);
}

TEST_CASE("snapshots reproduce the net curves exactly") {
  oracle::TestRng rng(139);
  auto [tb, qb] = make_bases(5, 8);
  MatchResult res;
  res.net.time_basis = tb;
  res.net.theta_basis = qb;
  for (int i = 0; i < 5; ++i) {
    Mat2X row(2, 8);
    for (int j = 0; j < 8; ++j) row.col(j) = Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    res.net.rows.push_back(row);
  }
  std::vector<SplineCurve> snaps = geodesic_snapshots(res, {0.0, 0.45, 1.0});
  REQUIRE(snaps.size() == 3);
  CHECK((snaps[0].controls - res.net.rows.front()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((snaps[2].controls - res.net.rows.back()).cwiseAbs().maxCoeff() == 0.0);
  SplineCurve mid = res.net.curve_at(0.45);
  CHECK((snaps[1].controls - mid.controls).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the solved objective is equivariant under rigid motions of the data") {
  oracle::TestRng rng(149);
  SplineCurve source = fit_spline(oracle::wobbly_polygon(rng, 150), 10).curve;
  SplineCurve target = fit_spline(oracle::wobbly_polygon(rng, 150, 1.2), 10).curve;
  MatchProblem p = small_problem(source, target);
  MatchResult base = solve_match(p);

  Eigen::Matrix2d rot = rot2(0.6);
  Vec2 shift(1.0, -2.0);
  MatchProblem moved = p;
  moved.source.controls = (rot * p.source.controls).colwise() + shift;
  moved.target.controls = (rot * p.target.controls).colwise() + shift;
  MatchResult res = solve_match(moved);
  CHECK(res.objective == doctest::Approx(base.objective).epsilon(1e-6));
  CHECK(res.geodesic_distance == doctest::Approx(base.geodesic_distance).epsilon(1e-5));
}

TEST_CASE("a coarse first level lands within a percent of the direct solve") {
  oracle::TestRng rng(151);
  SplineCurve source = fit_spline(oracle::wobbly_polygon(rng, 150), 12).curve;
  SplineCurve target = fit_spline(oracle::wobbly_polygon(rng, 150, 1.25), 12).curve;
  MatchProblem direct = small_problem(source, target);
  direct.resolution = {5, 12, 30};
  direct.opt.lbfgs.max_iterations = 400;

  MatchProblem staged = direct;
  staged.opt.levels = {{3, 6, 15}};
  MatchResult a = solve_match(direct);
  MatchResult b = solve_match(staged);
  CHECK(std::abs(a.objective - b.objective) < 0.01 * std::max(a.objective, b.objective));
}

TEST_CASE("prolongation preserves the path geometry and pins the source row") {
  oracle::TestRng rng(157);
  auto [tb, qb] = make_bases(4, 8);
  SplineCurve base = fit_spline(oracle::wobbly_polygon(rng, 150), 8).curve;
  PathControlNet coarse = PathControlNet::constant(tb, base);
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < 8; ++j)
      coarse.rows[i].col(j) += Vec2(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));

  auto [ftb, fqb] = make_bases(7, 16);
  SplineCurve fine_source = refit_curve(coarse.curve_at(0.0), 16);
  PathControlNet fine = prolong_net(coarse, ftb, fqb, fine_source.controls);
  REQUIRE(fine.rows.size() == 7);
  CHECK((fine.rows[0] - fine_source.controls).cwiseAbs().maxCoeff() == 0.0);
  for (double t : {0.2, 0.5, 0.9}) {
    SplineCurve c_coarse = coarse.curve_at(t);
    SplineCurve c_fine = fine.curve_at(t);
    for (int i = 0; i < 24; ++i) {
      double theta = two_pi * i / 24;
      CHECK((c_coarse.point(theta) - c_fine.point(theta)).norm() < 2e-3);
    }
  }
}

TEST_CASE("level schedules must be monotone and end at the working resolution") {
  SplineCurve circle = fitted_circle(1.0, 10);
  MatchProblem p = small_problem(circle, circle);
  p.opt.levels = {{3, 8, 16}};
  std::vector<Level> levels = p.effective_levels();
  REQUIRE(levels.size() == 2);
  CHECK(levels.back() == p.resolution);

  p.opt.levels = {{3, 8, 16}, p.resolution};
  CHECK(p.effective_levels().size() == 2);

  p.opt.levels = {{5, 12, 30}};  // coarser nowhere: not a refinement of 4/10/24
  CHECK_THROWS_AS(p.effective_levels(), std::invalid_argument);
  p.opt.levels = {{4, 12, 16}, {4, 10, 24}};  // theta shrinks between levels
  CHECK_THROWS_AS(p.effective_levels(), std::invalid_argument);
}

TEST_CASE("problem validation rejects broken setups") {
  SplineCurve circle = fitted_circle(1.0, 10);
  MatchProblem p = small_problem(circle, circle);
  p.lambda = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = small_problem(circle, circle);
  p.coeffs.a2 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = small_problem(circle, circle);
  p.kernel.sigma = -2.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = small_problem(circle, circle);
  CHECK_NOTHROW(p.validate());
}

TEST_SUITE_END();
