#include "curvematch/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "curvematch/rng.hpp"

namespace curvematch {

Mat2X circle_polygon(double radius, int points, const Vec2& center) {
  Mat2X out(2, points);
  for (int k = 0; k < points; ++k) {
    const double t = two_pi * k / points;
    out.col(k) = center + radius * Vec2(std::cos(t), std::sin(t));
  }
  return out;
}

Mat2X ellipse_polygon(double a, double b, int points, double tilt) {
  Mat2X out(2, points);
  const double ct = std::cos(tilt), st = std::sin(tilt);
  for (int k = 0; k < points; ++k) {
    const double t = two_pi * k / points;
    const double x = a * std::cos(t), y = b * std::sin(t);
    out.col(k) = Vec2(ct * x - st * y, st * x + ct * y);
  }
  return out;
}

Mat2X star_polygon(double radius, double pointiness, int arms, int points) {
  Mat2X out(2, points);
  for (int k = 0; k < points; ++k) {
    const double t = two_pi * k / points;
    const double r = radius * (1.0 + pointiness * std::cos(arms * t));
    out.col(k) = r * Vec2(std::cos(t), std::sin(t));
  }
  return out;
}

Mat2X superellipse_polygon(double a, double b, double power, int points) {
  Mat2X out(2, points);
  const double e = 2.0 / power;
  for (int k = 0; k < points; ++k) {
    const double t = two_pi * k / points;
    const double c = std::cos(t), s = std::sin(t);
    out.col(k) = Vec2(a * std::copysign(std::pow(std::abs(c), e), c),
                      b * std::copysign(std::pow(std::abs(s), e), s));
  }
  return out;
}

namespace {

// Smooth multiplicative radial jitter from a handful of low harmonics; keeps
// curves star-shaped for small amplitudes.
Mat2X perturb_radial(const Mat2X& poly, Rng& rng, double amplitude) {
  double amp[5], phase[5];
  for (int h = 0; h < 5; ++h) {
    amp[h] = rng.uniform(-amplitude, amplitude);
    phase[h] = rng.uniform(0.0, two_pi);
  }
  Mat2X out = poly;
  const int n = (int)poly.cols();
  for (int k = 0; k < n; ++k) {
    const double t = two_pi * k / n;
    double f = 1.0;
    for (int h = 0; h < 5; ++h) f += amp[h] * std::cos((h + 2) * t + phase[h]);
    out.col(k) *= f;
  }
  return out;
}

std::string pad2(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

std::vector<LabeledPolygon> synthetic_three_class(const SyntheticOptions& opts) {
  if (opts.per_class < 1 || opts.points < 8)
    throw std::invalid_argument("synthetic_three_class: need per_class >= 1 and points >= 8");
  Rng rng(opts.seed);
  std::vector<LabeledPolygon> out;
  out.reserve(3 * opts.per_class);

  for (int m = 0; m < opts.per_class; ++m) {
    const double a = rng.uniform(0.9, 1.2);
    const double ratio = rng.uniform(0.55, 0.75);
    const double tilt = rng.uniform(-0.3, 0.3);
    Mat2X poly = perturb_radial(ellipse_polygon(a, a * ratio, opts.points, tilt), rng,
                                opts.perturbation);
    out.push_back({"ellipse_" + pad2(m), 0, std::move(poly)});
  }
  for (int m = 0; m < opts.per_class; ++m) {
    const double r = rng.uniform(0.8, 1.0);
    const double s = rng.uniform(0.25, 0.35);
    Mat2X poly = perturb_radial(star_polygon(r, s, 5, opts.points), rng, opts.perturbation);
    out.push_back({"star_" + pad2(m), 1, std::move(poly)});
  }
  for (int m = 0; m < opts.per_class; ++m) {
    const double a = rng.uniform(1.0, 1.25);
    const double b = rng.uniform(0.6, 0.8);
    Mat2X poly = perturb_radial(superellipse_polygon(a, b, 4.0, opts.points), rng,
                                opts.perturbation);
    out.push_back({"rect_" + pad2(m), 2, std::move(poly)});
  }
  return out;
}

}  // namespace curvematch
