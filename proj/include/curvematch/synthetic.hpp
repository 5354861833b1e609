#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvematch/types.hpp"

namespace curvematch {

Mat2X circle_polygon(double radius, int points, const Vec2& center = Vec2::Zero());
Mat2X ellipse_polygon(double a, double b, int points, double tilt = 0.0);
// r(theta) = radius * (1 + pointiness * cos(arms * theta)).
Mat2X star_polygon(double radius, double pointiness, int arms, int points);
// Superellipse |x/a|^m + |y/b|^m = 1; m = 4 gives a rounded rectangle.
Mat2X superellipse_polygon(double a, double b, double power, int points);

struct SyntheticOptions {
  int per_class = 12;
  int points = 200;
  std::uint64_t seed = 0;
  double perturbation = 0.02;  // per-harmonic radial amplitude
};

struct LabeledPolygon {
  std::string name;
  int label = 0;
  Mat2X points;
};

// Three shape classes in canonical pose: ellipses, five-pointed stars, and
// rounded rectangles, with seeded parameter jitter and a smooth radial
// perturbation.  Emitted in class-major order.
std::vector<LabeledPolygon> synthetic_three_class(const SyntheticOptions& opts);

}  // namespace curvematch
