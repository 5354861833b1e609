#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "curvematch/errors.hpp"
#include "curvematch/fit.hpp"
#include "curvematch/stats.hpp"
#include "curvematch/synthetic.hpp"
#include "oracles.hpp"

using namespace curvematch;

namespace {

MatchProblem tiny_template() {
  MatchProblem p;
  p.coeffs = {1.0, 1.0, 1.0};
  p.kernel = {RadialKind::gaussian, ZonalKind::linear, 0.6};
  p.lambda = 5.0;
  p.resolution = {4, 10, 24};
  p.opt.levels = {};
  p.opt.lbfgs.max_iterations = 150;
  p.opt.lbfgs.g_tol_rel = 1e-5;
  p.opt.lbfgs.g_tol_abs = 1e-9;
  return p;
}

SplineCurve fitted_circle(double radius, int controls, const Vec2& center = Vec2::Zero()) {
  return fit_spline(circle_polygon(radius, 240, center), controls).curve;
}

// Distance matrix of planar points; stands in for shape distances when only
// the clustering behavior is under test.
Eigen::MatrixXd point_distances(const Mat2X& pts) {
  int n = (int)pts.cols();
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = (pts.col(i) - pts.col(j)).norm();
  return d;
}

double purity(const std::vector<int>& labels, const std::vector<int>& truth, int k) {
  std::map<std::pair<int, int>, int> counts;
  for (size_t i = 0; i < labels.size(); ++i) counts[{labels[i], truth[i]}]++;
  int hit = 0;
  for (int c = 0; c < k; ++c) {
    int best = 0;
    for (int t = 0; t < k; ++t) {
      auto it = counts.find({c, t});
      if (it != counts.end()) best = std::max(best, it->second);
    }
    hit += best;
  }
  return (double)hit / (double)labels.size();
}

}  // namespace

TEST_SUITE_BEGIN("stats");

TEST_CASE("distance matrices are symmetric with a zero diagonal") {
  std::vector<SplineCurve> shapes = {fitted_circle(1.0, 10), fitted_circle(1.0, 10),
                                     fit_spline(ellipse_polygon(1.3, 0.8, 200), 10).curve};
  DistanceMatrix dm = distance_matrix(shapes, tiny_template());
  REQUIRE(dm.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(dm.values(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(dm.values(i, j) == dm.values(j, i));
  }
  // Identical shapes are indistinguishable; distinct ones are not.
  CHECK(dm.values(0, 1) < 1e-4);
  CHECK(dm.values(0, 2) > 0.05);
}

TEST_CASE("worker count does not change the matrix") {
  std::vector<SplineCurve> shapes = {fitted_circle(1.0, 10),
                                     fit_spline(ellipse_polygon(1.2, 0.9, 200), 10).curve,
                                     fit_spline(ellipse_polygon(0.9, 1.4, 200), 10).curve};
  DistanceMatrix serial = distance_matrix(shapes, tiny_template(), 1);
  DistanceMatrix threaded = distance_matrix(shapes, tiny_template(), 3);
  CHECK((serial.values - threaded.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("precomputed pairs are honored and skipped") {
  std::vector<SplineCurve> shapes = {fitted_circle(1.0, 10),
                                     fit_spline(ellipse_polygon(1.2, 0.9, 200), 10).curve,
                                     fit_spline(ellipse_polygon(0.8, 1.3, 200), 10).curve};
  std::vector<PairOutcome> seen;
  DistanceMatrix full = distance_matrix(shapes, tiny_template(), 1,
                                        [&](const PairOutcome& p) { seen.push_back(p); });
  CHECK(seen.size() == 6);

  // Feed half the outcomes back in; only the rest are recomputed.
  std::vector<PairOutcome> half(seen.begin(), seen.begin() + 3);
  std::vector<PairOutcome> recomputed;
  DistanceMatrix resumed = distance_matrix(shapes, tiny_template(), 1,
                                           [&](const PairOutcome& p) { recomputed.push_back(p); },
                                           half);
  CHECK(recomputed.size() == 3);
  CHECK((full.values - resumed.values).cwiseAbs().maxCoeff() == 0.0);
  for (const PairOutcome& p : recomputed)
    for (const PairOutcome& q : half) CHECK(!(p.i == q.i && p.j == q.j));
}

TEST_CASE("two well separated groups are clustered perfectly") {
  Mat2X pts(2, 8);
  oracle::TestRng rng(163);
  for (int i = 0; i < 4; ++i) pts.col(i) = Vec2(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
  for (int i = 4; i < 8; ++i)
    pts.col(i) = Vec2(5 + rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
  ClusterResult res = spectral_cluster(point_distances(pts), 3, 2, 1);
  REQUIRE(res.labels.size() == 8);
  std::set<int> first(res.labels.begin(), res.labels.begin() + 4);
  std::set<int> second(res.labels.begin() + 4, res.labels.end());
  CHECK(first.size() == 1);
  CHECK(second.size() == 1);
  CHECK(*first.begin() != *second.begin());
  CHECK(res.num_components == 2);
  CHECK(!res.disconnected_warning);
}

TEST_CASE("one cluster collapses every label to zero") {
  oracle::TestRng rng(167);
  Mat2X pts(2, 6);
  for (int i = 0; i < 6; ++i) pts.col(i) = Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
  ClusterResult res = spectral_cluster(point_distances(pts), 2, 1, 0);
  for (int label : res.labels) CHECK(label == 0);
}

TEST_CASE("more graph components than clusters raises the warning") {
  oracle::TestRng rng(171);
  Mat2X pts(2, 9);
  for (int i = 0; i < 3; ++i) pts.col(i) = Vec2(rng.uniform(0, 0.1), rng.uniform(0, 0.1));
  for (int i = 3; i < 6; ++i) pts.col(i) = Vec2(7 + rng.uniform(0, 0.1), rng.uniform(0, 0.1));
  for (int i = 6; i < 9; ++i) pts.col(i) = Vec2(0, 9 + rng.uniform(0, 0.1));
  ClusterResult res = spectral_cluster(point_distances(pts), 2, 2, 0);
  CHECK(res.num_components == 3);
  CHECK(res.disconnected_warning);
}

TEST_CASE("three noisy blobs cluster with high purity") {
  oracle::TestRng rng(173);
  int per = 12, n = 3 * per;
  Mat2X pts(2, n);
  std::vector<int> truth(n);
  Vec2 centers[3] = {Vec2(0, 0), Vec2(4, 0), Vec2(2, 3.5)};
  for (int i = 0; i < n; ++i) {
    int c = i / per;
    truth[i] = c;
    pts.col(i) = centers[c] + Vec2(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
  }
  ClusterResult res = spectral_cluster(point_distances(pts), 6, 3, 42);
  CHECK(purity(res.labels, truth, 3) >= 0.9);
}

TEST_CASE("clustering is exactly invariant under input permutation") {
  oracle::TestRng rng(179);
  int n = 14;
  Mat2X pts(2, n);
  for (int i = 0; i < n; ++i) {
    Vec2 center = i % 2 ? Vec2(3.5, 1) : Vec2(0, 0);
    pts.col(i) = center + Vec2(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
  }
  Eigen::MatrixXd dist = point_distances(pts);
  ClusterResult base = spectral_cluster(dist, 4, 2, 7);

  // A fixed shuffle of the indices.
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (5 * i + 3) % n;
  Eigen::MatrixXd shuffled(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) shuffled(perm[i], perm[j]) = dist(i, j);
  ClusterResult moved = spectral_cluster(shuffled, 4, 2, 7);

  // Same partition, bit-identical embedding rows, relabeled consistently.
  std::map<int, int> relabel;
  for (int i = 0; i < n; ++i) {
    auto it = relabel.find(base.labels[i]);
    if (it == relabel.end())
      relabel[base.labels[i]] = moved.labels[perm[i]];
    else
      CHECK(it->second == moved.labels[perm[i]]);
  }
  for (int i = 0; i < n; ++i)
    CHECK((base.embedding.row(i) - moved.embedding.row(perm[i])).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("clustering validates its inputs") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  CHECK_THROWS_AS(spectral_cluster(d, 4, 2, 0), std::invalid_argument);   // p >= n
  CHECK_THROWS_AS(spectral_cluster(d, 2, 5, 0), std::invalid_argument);   // k > n
  CHECK_THROWS_AS(spectral_cluster(d, 0, 2, 0), std::invalid_argument);   // p < 1
  Eigen::MatrixXd bad = d;
  bad(1, 2) = 1.0;  // asymmetric
  CHECK_THROWS_AS(spectral_cluster(bad, 2, 2, 0), std::invalid_argument);
}

TEST_CASE("the mean of a single shape is that shape") {
  SplineCurve ellipse = fit_spline(ellipse_polygon(1.3, 0.8, 200), 10).curve;
  MeanResult res = karcher_mean({ellipse}, tiny_template());
  CHECK(res.converged);
  CHECK(res.objective < 1e-10);
  CHECK((res.mean.controls - ellipse.controls).cwiseAbs().maxCoeff() < 1e-8);
  REQUIRE(res.paths.size() == 1);
  CHECK(res.distances[0] < 1e-5);
}

TEST_CASE("the mean of identical shapes is that shape with zero objective") {
  SplineCurve ellipse = fit_spline(ellipse_polygon(1.2, 0.7, 200), 10).curve;
  MeanResult res = karcher_mean({ellipse, ellipse, ellipse}, tiny_template());
  CHECK(res.converged);
  CHECK(res.objective < 1e-8);
  CHECK((res.mean.controls - ellipse.controls).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("the mean of two concentric circles lies between them") {
  std::vector<SplineCurve> shapes = {fitted_circle(1.0, 10), fitted_circle(1.4, 10)};
  MeanResult res = karcher_mean(shapes, tiny_template());
  double r = 0.0;
  for (int i = 0; i < 32; ++i) r += res.mean.point(two_pi * i / 32).norm() / 32;
  CHECK(r > 1.05);
  CHECK(r < 1.35);
  // Equidistance up to discretization.
  CHECK(res.distances[0] == doctest::Approx(res.distances[1]).epsilon(0.1));
}

TEST_CASE("the initial velocity of a straight control path is the step itself") {
  auto [tb, qb] = make_bases(5, 8);
  SplineCurve base = fitted_circle(1.0, 8);
  Vec2 step(0.4, -0.2);
  PathControlNet net = PathControlNet::constant(tb, base);
  Eigen::VectorXd g = tb.greville();
  for (int i = 0; i < 5; ++i) net.rows[i].colwise() += (g[i] * step).eval();

  Mat2X v = log_map(net);
  REQUIRE(v.cols() == 8);
  for (int j = 0; j < 8; ++j) CHECK((v.col(j) - step).norm() < 1e-12);
  CHECK(log_map(PathControlNet::constant(tb, base)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tangent pca matches an independent eigensolver on its gram matrix") {
  oracle::TestRng rng(181);
  SplineCurve mean = fitted_circle(1.0, 10);
  QuadGrid grid = make_quad_grid(mean.basis, 3, 2);
  MetricCoefficients co{1, 1, 1};
  int n = 6;
  std::vector<Mat2X> fields;
  for (int s = 0; s < n; ++s) {
    Mat2X f(2, 10);
    for (int j = 0; j < 10; ++j) f.col(j) = Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    fields.push_back(f);
  }
  PcaResult pca = tangent_pca(mean, fields, co, grid);

  Mat2X bar = Mat2X::Zero(2, 10);
  for (const Mat2X& f : fields) bar += f / n;
  Eigen::MatrixXd gram(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      gram(a, b) = metric_inner(mean, (fields[a] - bar).eval(), (fields[b] - bar).eval(), co, grid);
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  oracle::jacobi_eigen(gram, evals, evecs);

  REQUIRE(pca.eigenvalues.size() == n);
  for (int m = 0; m < n; ++m)
    CHECK(pca.eigenvalues[m] ==
          doctest::Approx(evals[n - 1 - m]).epsilon(1e-8).scale(evals.maxCoeff()));
  CHECK((pca.mean_velocity - bar).cwiseAbs().maxCoeff() < 1e-14);

  // Directions are orthonormal under the metric at the mean.
  for (size_t a = 0; a < pca.directions.size(); ++a)
    for (size_t b = 0; b <= a; ++b) {
      double ip = metric_inner(mean, pca.directions[a], pca.directions[b], co, grid);
      CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8));
    }

  // Scores are the metric projections of the centered fields.
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < (int)pca.directions.size(); ++m) {
      double proj = metric_inner(mean, (fields[j] - bar).eval(), pca.directions[m], co, grid);
      CHECK(pca.scores(j, m) == doctest::Approx(proj).epsilon(1e-6));
    }
}

TEST_CASE("identical fields produce a zero spectrum, collinear ones a single mode") {
  SplineCurve mean = fitted_circle(1.0, 8);
  QuadGrid grid = make_quad_grid(mean.basis, 3, 2);
  MetricCoefficients co{1, 1, 1};

  Mat2X f(2, 8);
  for (int j = 0; j < 8; ++j) f.col(j) = Vec2(0.3 * j, 1.0 - 0.1 * j);
  PcaResult same = tangent_pca(mean, {f, f, f}, co, grid);
  CHECK(same.eigenvalues.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(same.directions.empty());

  std::vector<Mat2X> collinear = {0.5 * f, 1.0 * f, 2.0 * f, -1.0 * f};
  PcaResult ray = tangent_pca(mean, collinear, co, grid);
  REQUIRE(ray.eigenvalues.size() == 4);
  CHECK(ray.eigenvalues[0] > 0.0);
  CHECK(ray.eigenvalues[0] > 0.999 * ray.eigenvalues.sum());
  CHECK((int)ray.directions.size() == 1);
}

TEST_CASE("principal endpoints walk symmetrically around the mean") {
  oracle::TestRng rng(191);
  SplineCurve mean = fitted_circle(1.0, 8);
  QuadGrid grid = make_quad_grid(mean.basis, 3, 2);
  std::vector<Mat2X> fields;
  for (int s = 0; s < 4; ++s) {
    Mat2X f(2, 8);
    for (int j = 0; j < 8; ++j) f.col(j) = Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    fields.push_back(f);
  }
  PcaResult pca = tangent_pca(mean, fields, {1, 1, 1}, grid);
  REQUIRE(!pca.directions.empty());
  std::vector<SplineCurve> walked = principal_geodesic_endpoints(pca, 0, {-0.5, 0.0, 0.5});
  REQUIRE(walked.size() == 3);
  CHECK((walked[1].controls - mean.controls).cwiseAbs().maxCoeff() == 0.0);
  Mat2X lo = walked[0].controls, hi = walked[2].controls;
  CHECK(((lo + hi) / 2 - mean.controls).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((hi - mean.controls - 0.5 * pca.directions[0]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_SUITE_END();
