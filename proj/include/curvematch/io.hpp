#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvematch/matcher.hpp"
#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"

namespace curvematch {

// Everything a run needs, mirroring the JSON config format.  sigma <= 0 means
// "resolve from the data" (0.25 x mean curve diameter); resolved values are
// echoed back numerically so outputs reproduce themselves.
struct RunConfig {
  MetricCoefficients coeffs;
  std::string rho_name = "gaussian";
  std::string gamma_name = "linear";
  double sigma = 0.0;
  double lambda = 5.0;
  Level resolution;
  std::vector<Level> levels = {{5, 20, 50}};
  LbfgsSettings lbfgs;
  bool rigid = false;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  VarifoldKernel kernel(double resolved_sigma) const;
  // Problem shell (no curves) at the working resolution.
  MatchProblem problem_template(double resolved_sigma) const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c, double resolved_sigma);
RunConfig load_config(const std::string& path);

// 0.25 x mean diameter unless the config pins sigma.
double resolve_sigma(const RunConfig& c, const std::vector<SplineCurve>& curves);

struct NamedCurve {
  std::string name;
  SplineCurve curve;
  double fit_rms = 0.0;
};

struct CurvePolygon {
  std::string name;
  Mat2X points;
};

// {"name": ..., "points": [[x, y], ...]}; at least 8 finite points, first
// vertex not repeated at the end.
CurvePolygon parse_curve_polygon(const nlohmann::json& j, const std::string& fallback_name);
CurvePolygon load_curve_polygon(const std::string& path);

// Directory of curve JSON files (sorted by filename, manifest.json and
// non-curve files excluded) or a manifest {"files": [...]} with paths
// relative to the manifest.  Fits every polygon at num_theta controls.
std::vector<NamedCurve> load_dataset(const std::string& dir_or_manifest, int num_theta);

nlohmann::json controls_to_json(const Mat2X& controls);
Mat2X controls_from_json(const nlohmann::json& j);
nlohmann::json net_to_json(const PathControlNet& net);
PathControlNet net_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

// Canonical float formatting for CSV output: round-trip exact.
std::string format_g17(double v);

void write_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>& names);

// Overlaid closed curves as one SVG; one path element per curve.
std::string curves_svg(const std::vector<std::pair<SplineCurve, std::string>>& colored_curves,
                       int samples = 200);

}  // namespace curvematch
