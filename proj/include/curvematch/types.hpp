#pragma once

#include <Eigen/Dense>

namespace curvematch {

using Vec2 = Eigen::Vector2d;

// Planar point sets and coefficient fields are stored column-wise, one
// point per column, so a closed polygon with P vertices is a 2 x P matrix.
using Mat2X = Eigen::Matrix2Xd;

inline constexpr double two_pi = 6.283185307179586476925286766559;

}  // namespace curvematch
