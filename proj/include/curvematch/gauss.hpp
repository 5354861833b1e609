#pragma once

#include <vector>

namespace curvematch {

// Nodes and weights of an n-point Gauss-Legendre rule on [a, b].
// Exact for polynomials of degree <= 2n - 1.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

GaussRule gauss_legendre(int n, double a, double b);

}  // namespace curvematch
