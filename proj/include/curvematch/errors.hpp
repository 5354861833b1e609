#pragma once

#include <stdexcept>
#include <string>

namespace curvematch {

// A curve whose speed |c_theta| collapses below the relative floor at some
// quadrature site.  Arc-length derivatives are meaningless past this point,
// so every consumer treats the configuration as out of domain.
struct DegenerateCurve : std::runtime_error {
  double t;
  double theta;
  DegenerateCurve(double t_, double theta_, const std::string& what_)
      : std::runtime_error(what_), t(t_), theta(theta_) {}
};

// Least-squares fit with fewer effective samples than unknowns, or a normal
// matrix that is numerically singular.
struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Polygonal discretization hit an edge of zero length; unit tangents are
// undefined there.
struct ZeroEdge : std::runtime_error {
  int edge;
  ZeroEdge(int edge_, const std::string& what_) : std::runtime_error(what_), edge(edge_) {}
};

// The optimizer could not produce a usable iterate at some resolution level.
struct MatchFailure : std::runtime_error {
  int level;
  MatchFailure(int level_, const std::string& what_) : std::runtime_error(what_), level(level_) {}
};

}  // namespace curvematch
