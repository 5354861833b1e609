#include "curvematch/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace curvematch {

// Roots of the Legendre polynomial P_n by Newton iteration from the Chebyshev
// initial guess, evaluating P_n and P_n' through the three-term recurrence.
// Roots come in +/- pairs, so only the lower half is iterated.
GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");

  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);

  const int m = (n + 1) / 2;
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  const double pi = 3.14159265358979323846;

  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[i] = xm - xl * z;
    rule.x[n - 1 - i] = xm + xl * z;
    rule.w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    rule.w[n - 1 - i] = rule.w[i];
  }
  return rule;
}

}  // namespace curvematch
