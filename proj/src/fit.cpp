#include "curvematch/fit.hpp"

#include <cmath>
#include <stdexcept>

#include "curvematch/errors.hpp"

namespace curvematch {

namespace {

// Drop consecutive duplicate vertices (including a trailing copy of the
// first); the fit needs distinct support points.
Mat2X dedup_closed(const Mat2X& poly) {
  const int n = (int)poly.cols();
  std::vector<int> keep;
  keep.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n;
    if (i > 0 && (poly.col(i) - poly.col(prev)).norm() == 0.0) continue;
    keep.push_back(i);
  }
  if (!keep.empty() && keep.size() > 1 &&
      (poly.col(keep.back()) - poly.col(keep.front())).norm() == 0.0)
    keep.pop_back();
  Mat2X out(2, (int)keep.size());
  for (size_t i = 0; i < keep.size(); ++i) out.col((int)i) = poly.col(keep[i]);
  return out;
}

}  // namespace

Mat2X resample_closed(const Mat2X& polygon, int count) {
  const int n = (int)polygon.cols();
  if (n < 3) throw std::invalid_argument("resample_closed: need at least three vertices");
  if (count < 3) throw std::invalid_argument("resample_closed: need at least three samples");

  // Cumulative chord length including the closing edge.
  std::vector<double> cum(n + 1, 0.0);
  for (int i = 0; i < n; ++i)
    cum[i + 1] = cum[i] + (polygon.col((i + 1) % n) - polygon.col(i)).norm();
  const double total = cum[n];
  if (!(total > 0.0)) throw std::invalid_argument("resample_closed: polygon has zero length");

  Mat2X out(2, count);
  int seg = 0;
  for (int k = 0; k < count; ++k) {
    const double target = total * k / count;
    while (seg + 1 < n && cum[seg + 1] <= target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double frac = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.col(k) = polygon.col(seg) + frac * (polygon.col((seg + 1) % n) - polygon.col(seg));
  }
  return out;
}

FitResult fit_spline(const Mat2X& polygon, int num_controls, const FitOptions& opts) {
  Mat2X pts = dedup_closed(polygon);
  const int distinct = (int)pts.cols();
  if (distinct < num_controls)
    throw RankDeficient("fit_spline: fewer distinct vertices than controls (" +
                        std::to_string(distinct) + " < " + std::to_string(num_controls) + ")");
  if (opts.resample) pts = resample_closed(pts, distinct);

  const int m = (int)pts.cols();
  SplineBasis basis = SplineBasis::periodic(3, num_controls);

  // Normal equations assembled from the 4-wide local rows.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(num_controls, num_controls);
  Eigen::MatrixXd atb = Eigen::MatrixXd::Zero(num_controls, 2);
  std::vector<SplineBasis::Local> locs(m);
  for (int k = 0; k < m; ++k) {
    const double theta = two_pi * k / m;
    locs[k] = basis.eval_local(theta, 0);
    const auto& loc = locs[k];
    for (int a = 0; a <= 3; ++a) {
      const int ja = basis.control_of(loc.first, a);
      const double va = loc.ders(0, a);
      atb.row(ja) += va * pts.col(k).transpose();
      for (int b = 0; b <= 3; ++b)
        ata(ja, basis.control_of(loc.first, b)) += va * loc.ders(0, b);
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff())
    throw RankDeficient("fit_spline: singular normal matrix");
  Eigen::MatrixXd sol = ldlt.solve(atb);  // num_controls x 2

  FitResult res;
  res.curve.basis = basis;
  res.curve.controls = sol.transpose();

  double ss = 0.0;
  for (int k = 0; k < m; ++k) {
    Vec2 p = Vec2::Zero();
    for (int a = 0; a <= 3; ++a)
      p += locs[k].ders(0, a) * res.curve.controls.col(basis.control_of(locs[k].first, a));
    ss += (p - pts.col(k)).squaredNorm();
  }
  res.rms = std::sqrt(ss / m);
  return res;
}

SplineCurve refit_curve(const SplineCurve& c, int num_controls) {
  if (c.basis.num_controls() == num_controls && c.basis.is_periodic()) return c;
  const int m = std::max(4 * num_controls, 160);
  Mat2X samples(2, m);
  for (int k = 0; k < m; ++k) samples.col(k) = c.point(two_pi * k / m);
  FitOptions opts;
  opts.resample = false;  // keep the curve's own parametrization
  return fit_spline(samples, num_controls, opts).curve;
}

}  // namespace curvematch
