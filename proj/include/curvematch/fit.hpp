#pragma once

#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"

namespace curvematch {

struct FitOptions {
  // Resample the polygon uniformly by arc length before fitting.  Ingestion
  // goes through this path; set false to fit at uniform parameter values of
  // the given vertices (used when the samples are already well distributed).
  bool resample = true;
};

struct FitResult {
  SplineCurve curve;
  double rms;  // root-mean-square residual over the fitted samples
};

// Least-squares periodic cubic spline through a closed polygon.  Vertices are
// columns; the closing edge last->first is implied and the first vertex must
// not be repeated at the end.  Throws RankDeficient when fewer than
// num_controls distinct vertices remain after dropping consecutive
// duplicates.
FitResult fit_spline(const Mat2X& polygon, int num_controls, const FitOptions& opts = {});

// Uniform-in-arc-length resampling of a closed polygon to count vertices.
Mat2X resample_closed(const Mat2X& polygon, int count);

// Re-express a curve on a basis with num_controls controls by least squares
// over dense uniform-parameter samples.  Returns the curve unchanged when the
// control count already matches.
SplineCurve refit_curve(const SplineCurve& c, int num_controls);

}  // namespace curvematch
