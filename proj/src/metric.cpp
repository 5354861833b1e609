#include "curvematch/metric.hpp"

#include <cmath>
#include <stdexcept>

#include "curvematch/errors.hpp"

namespace curvematch {

void MetricCoefficients::validate() const {
  if (!(a0 > 0.0) || !(a1 >= 0.0) || !(a2 >= 0.0))
    throw std::invalid_argument("metric coefficients: need a0 > 0, a1 >= 0, a2 >= 0");
}

namespace {

// Jets of the curve slice C and of up to two fields at every theta site.
struct SliceJets {
  std::vector<Vec2> c1, c2;
  std::vector<double> speed;

  void resize(size_t n) {
    c1.resize(n);
    c2.resize(n);
    speed.resize(n);
  }
};

void curve_jets(const Mat2X& C, const SplineBasis& basis, const QuadGrid& grid, SliceJets& out) {
  const size_t n = grid.sites.size();
  out.resize(n);
  for (size_t q = 0; q < n; ++q) {
    const QuadSite& s = grid.sites[q];
    Vec2 d1 = Vec2::Zero(), d2 = Vec2::Zero();
    for (int b = 0; b <= basis.degree(); ++b) {
      const auto col = C.col(basis.control_of(s.first, b));
      d1 += s.b(1, b) * col;
      d2 += s.b(2, b) * col;
    }
    out.c1[q] = d1;
    out.c2[q] = d2;
    out.speed[q] = d1.norm();
  }
}

// Enforces the relative speed floor over one curve's worth of sites.
void require_regular(const SliceJets& jets, const QuadGrid& grid, double t) {
  double mean = 0.0;
  for (double s : jets.speed) mean += s;
  mean /= (double)jets.speed.size();
  const double floor = speed_floor_rel * mean;
  for (size_t q = 0; q < jets.speed.size(); ++q) {
    if (!(jets.speed[q] > floor))
      throw DegenerateCurve(t, grid.sites[q].x, "curve speed below regularity floor");
  }
}

}  // namespace

double metric_inner(const SplineCurve& c, const Mat2X& h, const Mat2X& k,
                    const MetricCoefficients& coeff, const QuadGrid& grid) {
  coeff.validate();
  const SplineBasis& basis = c.basis;
  SliceJets jets;
  curve_jets(c.controls, basis, grid, jets);
  require_regular(jets, grid, 0.0);

  double acc = 0.0;
  const bool same = (&h == &k);
  for (size_t q = 0; q < grid.sites.size(); ++q) {
    const QuadSite& s = grid.sites[q];
    Vec2 h0 = Vec2::Zero(), h1 = Vec2::Zero(), h2 = Vec2::Zero();
    Vec2 k0 = Vec2::Zero(), k1 = Vec2::Zero(), k2 = Vec2::Zero();
    for (int b = 0; b <= basis.degree(); ++b) {
      const int j = basis.control_of(s.first, b);
      h0 += s.b(0, b) * h.col(j);
      h1 += s.b(1, b) * h.col(j);
      h2 += s.b(2, b) * h.col(j);
      if (!same) {
        k0 += s.b(0, b) * k.col(j);
        k1 += s.b(1, b) * k.col(j);
        k2 += s.b(2, b) * k.col(j);
      }
    }
    if (same) {
      k0 = h0;
      k1 = h1;
      k2 = h2;
    }
    ArcOps ops = ArcOps::at(jets.c1[q], jets.c2[q]);
    const double nu = ops.speed;
    const Vec2 dh2 = ops.second(h1, h2), dk2 = ops.second(k1, k2);
    acc += s.weight * (coeff.a0 * nu * h0.dot(k0) + coeff.a1 * h1.dot(k1) / nu +
                       coeff.a2 * nu * dh2.dot(dk2));
  }
  return acc;
}

namespace {

// Slice coefficients of position and velocity at one time site.
void time_slice(const PathControlNet& net, const QuadSite& ts, Mat2X& C, Mat2X& V) {
  const SplineBasis& tb = net.time_basis;
  C.setZero(2, net.num_theta_controls());
  V.setZero(2, net.num_theta_controls());
  for (int a = 0; a <= tb.degree(); ++a) {
    const Mat2X& row = net.rows[tb.control_of(ts.first, a)];
    C += ts.b(0, a) * row;
    V += ts.b(1, a) * row;
  }
}

double slice_metric_value(const Mat2X& C, const Mat2X& V, const SplineBasis& basis,
                          const QuadGrid& grid, const MetricCoefficients& coeff, double t) {
  SliceJets jets;
  curve_jets(C, basis, grid, jets);
  require_regular(jets, grid, t);
  double acc = 0.0;
  for (size_t q = 0; q < grid.sites.size(); ++q) {
    const QuadSite& s = grid.sites[q];
    Vec2 h0 = Vec2::Zero(), h1 = Vec2::Zero(), h2 = Vec2::Zero();
    for (int b = 0; b <= basis.degree(); ++b) {
      const auto col = V.col(basis.control_of(s.first, b));
      h0 += s.b(0, b) * col;
      h1 += s.b(1, b) * col;
      h2 += s.b(2, b) * col;
    }
    ArcOps ops = ArcOps::at(jets.c1[q], jets.c2[q]);
    const double nu = ops.speed;
    const Vec2 dh2 = ops.second(h1, h2);
    acc += s.weight * (coeff.a0 * nu * h0.squaredNorm() + coeff.a1 * h1.squaredNorm() / nu +
                       coeff.a2 * nu * dh2.squaredNorm());
  }
  return acc;
}

}  // namespace

std::vector<double> energy_time_profile(const PathControlNet& net, const MetricCoefficients& coeff,
                                        const PathQuadrature& quad) {
  coeff.validate();
  std::vector<double> profile;
  profile.reserve(quad.time.sites.size());
  Mat2X C, V;
  for (const QuadSite& ts : quad.time.sites) {
    time_slice(net, ts, C, V);
    profile.push_back(slice_metric_value(C, V, net.theta_basis, quad.theta, coeff, ts.x));
  }
  return profile;
}

double path_energy(const PathControlNet& net, const MetricCoefficients& coeff,
                   const PathQuadrature& quad) {
  std::vector<double> profile = energy_time_profile(net, coeff, quad);
  double e = 0.0;
  for (size_t r = 0; r < profile.size(); ++r) e += quad.time.sites[r].weight * profile[r];
  return e;
}

EnergyReport path_energy_report(const PathControlNet& net, const MetricCoefficients& coeff,
                                const PathQuadrature& quad) {
  std::vector<double> profile = energy_time_profile(net, coeff, quad);
  EnergyReport rep;
  rep.contributions.resize(profile.size());
  for (size_t r = 0; r < profile.size(); ++r) {
    rep.contributions[r] = quad.time.sites[r].weight * profile[r];
    rep.energy += rep.contributions[r];
  }
  return rep;
}

double path_length(const PathControlNet& net, const MetricCoefficients& coeff,
                   const PathQuadrature& quad) {
  std::vector<double> profile = energy_time_profile(net, coeff, quad);
  double len = 0.0;
  for (size_t r = 0; r < profile.size(); ++r)
    len += quad.time.sites[r].weight * std::sqrt(std::max(profile[r], 0.0));
  return len;
}

double path_energy_gradient(const PathControlNet& net, const MetricCoefficients& coeff,
                            const PathQuadrature& quad, std::vector<Mat2X>& grad) {
  coeff.validate();
  const SplineBasis& tb = net.time_basis;
  const SplineBasis& qb = net.theta_basis;
  const double a0 = coeff.a0, a1 = coeff.a1, a2 = coeff.a2;

  grad.assign(net.rows.size(), Mat2X::Zero(2, net.num_theta_controls()));
  double energy = 0.0;

  Mat2X C, V;
  SliceJets jets;
  for (const QuadSite& ts : quad.time.sites) {
    time_slice(net, ts, C, V);
    curve_jets(C, qb, quad.theta, jets);
    require_regular(jets, quad.theta, ts.x);

    for (size_t q = 0; q < quad.theta.sites.size(); ++q) {
      const QuadSite& s = quad.theta.sites[q];
      Vec2 h0 = Vec2::Zero(), h1 = Vec2::Zero(), h2 = Vec2::Zero();
      for (int b = 0; b <= qb.degree(); ++b) {
        const auto col = V.col(qb.control_of(s.first, b));
        h0 += s.b(0, b) * col;
        h1 += s.b(1, b) * col;
        h2 += s.b(2, b) * col;
      }

      const Vec2 c1 = jets.c1[q], c2 = jets.c2[q];
      const double nu = jets.speed[q];
      const double inv = 1.0 / nu;
      const double inv2 = inv * inv, inv3 = inv2 * inv, inv4 = inv2 * inv2;
      const double m = c1.dot(c2);
      const Vec2 dh2 = h2 * inv2 - h1 * (m * inv4);

      const double F = a0 * nu * h0.squaredNorm() + a1 * h1.squaredNorm() * inv +
                       a2 * nu * dh2.squaredNorm();
      energy += ts.weight * s.weight * F;

      // Adjoints of F in the raw jets (h0, h1, h2) and the slice jets (c1, c2).
      const Vec2 dF_h0 = 2.0 * a0 * nu * h0;
      const Vec2 dF_h1 = 2.0 * a1 * inv * h1 - 2.0 * a2 * m * inv3 * dh2;
      const Vec2 dF_h2 = 2.0 * a2 * inv * dh2;
      const double dF_nu = a0 * h0.squaredNorm() - a1 * h1.squaredNorm() * inv2 +
                           a2 * dh2.squaredNorm() - 4.0 * a2 * dh2.dot(h2) * inv2 +
                           8.0 * a2 * m * dh2.dot(h1) * inv4;
      const double dF_m = -2.0 * a2 * dh2.dot(h1) * inv3;
      const Vec2 dF_c1 = dF_nu * inv * c1 + dF_m * c2;
      const Vec2 dF_c2 = dF_m * c1;

      const double w = ts.weight * s.weight;
      for (int a = 0; a <= tb.degree(); ++a) {
        Mat2X& g = grad[tb.control_of(ts.first, a)];
        const double bt0 = ts.b(0, a), bt1 = ts.b(1, a);
        for (int b = 0; b <= qb.degree(); ++b) {
          const int j = qb.control_of(s.first, b);
          g.col(j) += w * (bt1 * (s.b(0, b) * dF_h0 + s.b(1, b) * dF_h1 + s.b(2, b) * dF_h2) +
                           bt0 * (s.b(1, b) * dF_c1 + s.b(2, b) * dF_c2));
        }
      }
    }
  }
  return energy;
}

}  // namespace curvematch
