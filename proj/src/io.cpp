#include "curvematch/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "curvematch/fit.hpp"
#include "curvematch/varifold.hpp"

namespace curvematch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Level level_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("multigrid level must be [num_time, num_theta, samples]");
  Level lv;
  lv.num_time = j.at(0).get<int>();
  lv.num_theta = j.at(1).get<int>();
  lv.samples = j.at(2).get<int>();
  return lv;
}

json level_to_json(const Level& lv) {
  return json::array({lv.num_time, lv.num_theta, lv.samples});
}

}  // namespace

void RunConfig::validate() const {
  coeffs.validate();
  if (coeffs.a2 <= 0.0) throw std::invalid_argument("metric coefficient a2 must be positive");
  radial_from_name(rho_name);
  zonal_from_name(gamma_name);
  if (std::isfinite(sigma) == false) throw std::invalid_argument("kernel sigma must be finite");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (resolution.num_time < 3 || resolution.num_theta < 6 || resolution.samples < 8)
    throw std::invalid_argument("discretization too coarse (need >= 3 time, 6 theta controls, 8 samples)");
  for (const Level& lv : levels)
    if (lv.num_time < 3 || lv.num_theta < 6 || lv.samples < 8)
      throw std::invalid_argument("multigrid level too coarse");
  lbfgs.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

VarifoldKernel RunConfig::kernel(double resolved_sigma) const {
  VarifoldKernel k;
  k.radial = radial_from_name(rho_name);
  k.zonal = zonal_from_name(gamma_name);
  k.sigma = resolved_sigma;
  k.validate();
  return k;
}

MatchProblem RunConfig::problem_template(double resolved_sigma) const {
  MatchProblem p;
  p.coeffs = coeffs;
  p.kernel = kernel(resolved_sigma);
  p.lambda = lambda;
  p.rigid_enabled = rigid;
  p.resolution = resolution;
  p.opt.lbfgs = lbfgs;
  p.opt.levels = levels;
  return p;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  if (j.contains("metric")) {
    const json& m = j.at("metric");
    c.coeffs.a0 = m.value("a0", c.coeffs.a0);
    c.coeffs.a1 = m.value("a1", c.coeffs.a1);
    c.coeffs.a2 = m.value("a2", c.coeffs.a2);
  }
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    if (k.contains("rho")) {
      const json& r = k.at("rho");
      c.rho_name = r.value("name", c.rho_name);
      if (r.contains("sigma")) {
        const json& s = r.at("sigma");
        if (s.is_string()) {
          if (s.get<std::string>() != "auto")
            throw std::runtime_error("kernel sigma must be a number or \"auto\"");
          c.sigma = 0.0;
        } else {
          c.sigma = s.get<double>();
          if (!(c.sigma > 0.0)) throw std::runtime_error("kernel sigma must be positive");
        }
      }
    }
    if (k.contains("gamma")) c.gamma_name = k.at("gamma").value("name", c.gamma_name);
  }
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("discretization")) {
    const json& d = j.at("discretization");
    c.resolution.num_time = d.value("num_time", c.resolution.num_time);
    c.resolution.num_theta = d.value("num_theta", c.resolution.num_theta);
    c.resolution.samples = d.value("samples", c.resolution.samples);
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    c.lbfgs.memory = o.value("memory", c.lbfgs.memory);
    c.lbfgs.max_iterations = o.value("max_iterations", c.lbfgs.max_iterations);
    c.lbfgs.g_tol_rel = o.value("g_tol_rel", c.lbfgs.g_tol_rel);
    c.lbfgs.g_tol_abs = o.value("g_tol_abs", c.lbfgs.g_tol_abs);
    c.lbfgs.armijo_c1 = o.value("armijo_c1", c.lbfgs.armijo_c1);
    c.lbfgs.curvature_c2 = o.value("curvature_c2", c.lbfgs.curvature_c2);
    c.lbfgs.max_line_search = o.value("max_line_search", c.lbfgs.max_line_search);
  }
  if (j.contains("multigrid")) {
    c.levels.clear();
    for (const json& lv : j.at("multigrid")) c.levels.push_back(level_from_json(lv));
  }
  c.rigid = j.value("rigid", c.rigid);
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c, double resolved_sigma) {
  json j;
  j["metric"] = {{"a0", c.coeffs.a0}, {"a1", c.coeffs.a1}, {"a2", c.coeffs.a2}};
  j["kernel"] = {{"rho", {{"name", c.rho_name}, {"sigma", resolved_sigma}}},
                 {"gamma", {{"name", c.gamma_name}}}};
  j["lambda"] = c.lambda;
  j["discretization"] = {{"num_time", c.resolution.num_time},
                         {"num_theta", c.resolution.num_theta},
                         {"samples", c.resolution.samples}};
  j["optimizer"] = {{"memory", c.lbfgs.memory},
                    {"max_iterations", c.lbfgs.max_iterations},
                    {"g_tol_rel", c.lbfgs.g_tol_rel},
                    {"g_tol_abs", c.lbfgs.g_tol_abs},
                    {"armijo_c1", c.lbfgs.armijo_c1},
                    {"curvature_c2", c.lbfgs.curvature_c2},
                    {"max_line_search", c.lbfgs.max_line_search}};
  json mg = json::array();
  for (const Level& lv : c.levels) mg.push_back(level_to_json(lv));
  j["multigrid"] = mg;
  j["rigid"] = c.rigid;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  return j;
}

RunConfig load_config(const std::string& path) {
  try {
    return config_from_json(read_json_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

double resolve_sigma(const RunConfig& c, const std::vector<SplineCurve>& curves) {
  if (c.sigma > 0.0) return c.sigma;
  if (curves.empty()) throw std::invalid_argument("cannot resolve sigma without curves");
  double mean = 0.0;
  for (const SplineCurve& cv : curves) mean += curve_diameter(cv);
  mean /= static_cast<double>(curves.size());
  double sigma = 0.25 * mean;
  if (!(sigma > 0.0)) throw std::runtime_error("degenerate curves: resolved sigma is zero");
  return sigma;
}

CurvePolygon parse_curve_polygon(const json& j, const std::string& fallback_name) {
  if (!j.is_object() || !j.contains("points"))
    throw std::runtime_error("curve file must be an object with a \"points\" array");
  CurvePolygon out;
  out.name = j.value("name", fallback_name);
  const json& pts = j.at("points");
  if (!pts.is_array() || pts.size() < 8)
    throw std::runtime_error("curve needs at least 8 points");
  out.points.resize(2, static_cast<int>(pts.size()));
  for (int k = 0; k < out.points.cols(); ++k) {
    const json& p = pts.at(k);
    if (!p.is_array() || p.size() != 2)
      throw std::runtime_error("each point must be [x, y]");
    double x = p.at(0).get<double>();
    double y = p.at(1).get<double>();
    if (!std::isfinite(x) || !std::isfinite(y))
      throw std::runtime_error("points must be finite");
    out.points.col(k) = Vec2(x, y);
  }
  int last = static_cast<int>(out.points.cols()) - 1;
  if (out.points.col(last) == out.points.col(0))
    throw std::runtime_error("first point repeated at the end; curves are implicitly closed");
  return out;
}

CurvePolygon load_curve_polygon(const std::string& path) {
  try {
    return parse_curve_polygon(read_json_file(path), fs::path(path).stem().string());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::vector<NamedCurve> load_dataset(const std::string& dir_or_manifest, int num_theta) {
  std::vector<std::string> files;
  fs::path root(dir_or_manifest);
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      fs::path p = entry.path();
      if (p.extension() != ".json" || p.filename() == "manifest.json") continue;
      files.push_back(p.string());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(root)) {
    json manifest = read_json_file(dir_or_manifest);
    if (!manifest.is_object() || !manifest.contains("files"))
      throw std::runtime_error(dir_or_manifest + ": manifest must contain a \"files\" array");
    fs::path base = root.parent_path();
    for (const json& f : manifest.at("files"))
      files.push_back((base / f.get<std::string>()).string());
  } else {
    throw std::runtime_error(dir_or_manifest + ": no such file or directory");
  }
  if (files.empty()) throw std::runtime_error(dir_or_manifest + ": dataset is empty");

  std::vector<NamedCurve> out;
  std::set<std::string> seen;
  for (const std::string& file : files) {
    CurvePolygon poly = load_curve_polygon(file);
    if (!seen.insert(poly.name).second)
      throw std::runtime_error(file + ": duplicate curve name \"" + poly.name + "\"");
    FitResult fit;
    try {
      fit = fit_spline(poly.points, num_theta);
    } catch (const std::exception& e) {
      throw std::runtime_error(file + ": " + e.what());
    }
    std::fprintf(stderr, "  fit %-24s %4d points -> %3d controls, rms %.3g\n", poly.name.c_str(),
                 static_cast<int>(poly.points.cols()), num_theta, fit.rms);
    out.push_back({poly.name, std::move(fit.curve), fit.rms});
  }
  return out;
}

json controls_to_json(const Mat2X& controls) {
  json rows = json::array();
  for (int a = 0; a < controls.cols(); ++a)
    rows.push_back(json::array({controls(0, a), controls(1, a)}));
  return rows;
}

Mat2X controls_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::runtime_error("expected an array of control points");
  Mat2X out(2, static_cast<int>(j.size()));
  for (int a = 0; a < out.cols(); ++a) {
    const json& p = j.at(a);
    out(0, a) = p.at(0).get<double>();
    out(1, a) = p.at(1).get<double>();
  }
  return out;
}

json net_to_json(const PathControlNet& net) {
  json rows = json::array();
  for (const Mat2X& row : net.rows) rows.push_back(controls_to_json(row));
  return json{{"num_time", net.time_basis.num_controls()},
              {"num_theta", net.theta_basis.num_controls()},
              {"rows", rows}};
}

PathControlNet net_from_json(const json& j) {
  int nt = j.at("num_time").get<int>();
  int nq = j.at("num_theta").get<int>();
  auto [tb, qb] = make_bases(nt, nq);
  PathControlNet net;
  net.time_basis = tb;
  net.theta_basis = qb;
  const json& rows = j.at("rows");
  if (static_cast<int>(rows.size()) != nt)
    throw std::runtime_error("control net row count does not match num_time");
  for (const json& row : rows) {
    Mat2X r = controls_from_json(row);
    if (r.cols() != nq) throw std::runtime_error("control net row width does not match num_theta");
    net.rows.push_back(std::move(r));
  }
  return net;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  return json::parse(read_text_file(path));
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& m) {
  std::ostringstream out;
  for (size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_g17(m(i, j));
    out << "\n";
  }
  write_text_file(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>& names) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  names = split_csv_line(line);
  int n = static_cast<int>(names.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing matrix row");
    std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != n)
      throw std::runtime_error(path + ": row width does not match header");
    for (int j = 0; j < n; ++j) m(i, j) = std::stod(cells[j]);
  }
  return m;
}

std::string curves_svg(const std::vector<std::pair<SplineCurve, std::string>>& colored_curves,
                       int samples) {
  if (colored_curves.empty()) throw std::invalid_argument("nothing to draw");
  // Sample in a y-flipped frame so the plane's orientation matches the screen.
  std::vector<Mat2X> polys;
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& [curve, color] : colored_curves) {
    Mat2X poly(2, samples);
    for (int k = 0; k < samples; ++k) {
      Vec2 p = curve.point(two_pi * k / samples);
      poly.col(k) = Vec2(p.x(), -p.y());
    }
    min_x = std::min(min_x, poly.row(0).minCoeff());
    max_x = std::max(max_x, poly.row(0).maxCoeff());
    min_y = std::min(min_y, poly.row(1).minCoeff());
    max_y = std::max(max_y, poly.row(1).maxCoeff());
    polys.push_back(std::move(poly));
  }
  double extent = std::max(max_x - min_x, max_y - min_y);
  if (!(extent > 0.0)) extent = 1.0;
  double margin = 0.05 * extent;
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.6f %.6f %.6f %.6f\">\n",
                min_x - margin, min_y - margin, (max_x - min_x) + 2 * margin,
                (max_y - min_y) + 2 * margin);
  out << buf;
  double stroke = 0.004 * extent;
  for (size_t i = 0; i < polys.size(); ++i) {
    out << "  <path d=\"";
    const Mat2X& poly = polys[i];
    for (int k = 0; k < poly.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), "%s%.6f %.6f", k == 0 ? "M" : " L", poly(0, k), poly(1, k));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  " Z\" fill=\"none\" stroke=\"%s\" stroke-width=\"%.6f\" "
                  "stroke-linejoin=\"round\"/>\n",
                  colored_curves[i].second.c_str(), stroke);
    out << buf;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace curvematch
