#pragma once

#include <vector>

#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"

namespace curvematch {

// Coefficients of the second-order metric
//   G_c(h, k) = int a0 <h,k> + a1 <D_s h, D_s k> + a2 <D_s^2 h, D_s^2 k> ds
// with D_s = (1/|c'|) d/dtheta and ds = |c'| dtheta.
struct MetricCoefficients {
  double a0 = 1.0;
  double a1 = 1.0;
  double a2 = 1.0;
  // a0 must be positive; a1, a2 non-negative.  The matching pipeline insists
  // on a2 > 0 (second-order term controls the end curve), but the reduced
  // first-order and L2 metrics remain evaluable here.
  void validate() const;
};

struct EnergyReport {
  double energy = 0.0;
  std::vector<double> contributions;  // weighted per-time-site terms, sum = energy
};

// G_c(h, k) for coefficient fields h, k on the basis of c.
double metric_inner(const SplineCurve& c, const Mat2X& h, const Mat2X& k,
                    const MetricCoefficients& coeff, const QuadGrid& theta_grid);

// G_{c(t)}(c_t, c_t) at every time quadrature site, in site order.
std::vector<double> energy_time_profile(const PathControlNet& net, const MetricCoefficients& coeff,
                                        const PathQuadrature& quad);

// E(c) = int_0^1 G dt and L(c) = int_0^1 sqrt(G) dt.
double path_energy(const PathControlNet& net, const MetricCoefficients& coeff,
                   const PathQuadrature& quad);
EnergyReport path_energy_report(const PathControlNet& net, const MetricCoefficients& coeff,
                                const PathQuadrature& quad);
double path_length(const PathControlNet& net, const MetricCoefficients& coeff,
                   const PathQuadrature& quad);

// Energy and its gradient with respect to every control point, including the
// endpoint rows; callers freeze rows by ignoring their blocks.
double path_energy_gradient(const PathControlNet& net, const MetricCoefficients& coeff,
                            const PathQuadrature& quad, std::vector<Mat2X>& grad);

}  // namespace curvematch
