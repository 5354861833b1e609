#include "curvematch/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "curvematch/fit.hpp"
#include "curvematch/io.hpp"
#include "curvematch/matcher.hpp"
#include "curvematch/stats.hpp"
#include "curvematch/synthetic.hpp"

namespace curvematch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* stop_name(StopReason r) {
  switch (r) {
    case StopReason::gradient_tolerance: return "gradient_tolerance";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::line_search_failed: return "line_search_failed";
    case StopReason::non_finite: return "non_finite";
  }
  return "unknown";
}

// Options shared by the shape-processing subcommands.  Precedence for values
// that exist in both places: flag, then config file, then built-in default
// (jobs additionally falls back to CURVEMATCH_JOBS).
struct Common {
  std::string config_path;
  std::string out = "out";
  double lambda = 0.0;
  int jobs = 0;
  std::uint64_t seed = 0;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    lambda_opt = cmd->add_option("--lambda", lambda, "fidelity weight override");
    cmd->add_option("--out", out, "output directory");
    jobs_opt = cmd->add_option("--jobs", jobs, "worker threads");
    seed_opt = cmd->add_option("--seed", seed, "RNG seed override");
  }

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (lambda_opt && lambda_opt->count()) {
      if (!(lambda > 0.0)) throw std::runtime_error("--lambda must be positive");
      c.lambda = lambda;
    }
    if (seed_opt && seed_opt->count()) c.seed = seed;
    if (jobs_opt && jobs_opt->count()) {
      c.jobs = jobs;
    } else if (const char* env = std::getenv("CURVEMATCH_JOBS")) {
      int v = std::atoi(env);
      if (v >= 1) c.jobs = v;
    }
    c.validate();
    return c;
  }
};

std::string gray_shade(double t) {
  int v = (int)std::lround(176.0 * std::clamp(t, 0.0, 1.0));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", v, v, v);
  return buf;
}

json curve_block(const std::string& name, const SplineCurve& c) {
  return json{{"name", name},
              {"num_theta", c.basis.num_controls()},
              {"controls", controls_to_json(c.controls)}};
}

json level_trace_json(const LevelTrace& t) {
  return json{{"level", json::array({t.level.num_time, t.level.num_theta, t.level.samples})},
              {"iterations", t.iterations},
              {"stop", stop_name(t.reason)},
              {"objective", t.objective_history.empty() ? 0.0 : t.objective_history.back()},
              {"grad_norm", t.grad_norm_history.empty() ? 0.0 : t.grad_norm_history.back()}};
}

int cmd_match(const Common& co, const std::string& source_path, const std::string& target_path) {
  RunConfig cfg = co.load();
  CurvePolygon sp = load_curve_polygon(source_path);
  CurvePolygon tp = load_curve_polygon(target_path);
  FitResult sf = fit_spline(sp.points, cfg.resolution.num_theta);
  FitResult tf = fit_spline(tp.points, cfg.resolution.num_theta);
  std::fprintf(stderr, "  fit %s: rms %.3g; fit %s: rms %.3g\n", sp.name.c_str(), sf.rms,
               tp.name.c_str(), tf.rms);
  double sigma = resolve_sigma(cfg, {sf.curve, tf.curve});

  MatchProblem prob = cfg.problem_template(sigma);
  prob.source = sf.curve;
  prob.target = tf.curve;
  MatchResult res = solve_match(prob);

  const std::vector<double> times = {0.0, 0.3, 0.6, 1.0};
  std::vector<SplineCurve> snaps = geodesic_snapshots(res, times);

  json out;
  out["config"] = config_to_json(cfg, sigma);
  out["source"] = curve_block(sp.name, sf.curve);
  out["target"] = curve_block(tp.name, tf.curve);
  out["net"] = net_to_json(res.net);
  out["rigid"] = {{"angle", res.rigid.angle},
                  {"translation", json::array({res.rigid.translation.x(), res.rigid.translation.y()})}};
  out["energy"] = res.energy;
  out["fidelity"] = res.fidelity;
  out["objective"] = res.objective;
  out["distance"] = res.geodesic_distance;
  out["converged"] = res.converged;
  json lv = json::array();
  for (const LevelTrace& t : res.levels) lv.push_back(level_trace_json(t));
  out["levels"] = lv;
  json sn = json::array();
  for (size_t k = 0; k < snaps.size(); ++k)
    sn.push_back({{"t", times[k]}, {"controls", controls_to_json(snaps[k].controls)}});
  out["snapshots"] = sn;
  write_json_file((fs::path(co.out) / "geodesic.json").string(), out);

  std::vector<std::pair<SplineCurve, std::string>> draw;
  for (size_t k = 0; k < snaps.size(); ++k) draw.emplace_back(snaps[k], gray_shade(times[k]));
  draw.emplace_back(tf.curve, "#1f77b4");
  write_text_file((fs::path(co.out) / "match.svg").string(), curves_svg(draw));

  std::fprintf(stderr, "  solved in %.2fs\n", res.wall_seconds);
  std::printf("energy %.6g  fidelity %.6g  objective %.6g  distance %.6g  converged %s\n",
              res.energy, res.fidelity, res.objective, res.geodesic_distance,
              res.converged ? "yes" : "no");
  return res.converged ? 0 : 2;
}

std::vector<PairOutcome> read_checkpoint(const std::string& path, int n) {
  std::vector<PairOutcome> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A truncated final line from an interrupted run is skipped, not fatal.
    try {
      json j = json::parse(line);
      PairOutcome p;
      p.i = j.at("i").get<int>();
      p.j = j.at("j").get<int>();
      p.distance = j.at("distance").get<double>();
      p.energy = j.at("energy").get<double>();
      p.fidelity = j.at("fidelity").get<double>();
      p.converged = j.at("converged").get<bool>();
      if (p.i < 0 || p.i >= n || p.j < 0 || p.j >= n || p.i == p.j) continue;
      out.push_back(p);
    } catch (const json::exception&) {
      continue;
    }
  }
  return out;
}

int cmd_matrix(const Common& co, const std::string& dataset) {
  RunConfig cfg = co.load();
  std::vector<NamedCurve> shapes = load_dataset(dataset, cfg.resolution.num_theta);
  std::vector<std::string> names;
  std::vector<SplineCurve> curves;
  for (const NamedCurve& s : shapes) {
    names.push_back(s.name);
    curves.push_back(s.curve);
  }
  double sigma = resolve_sigma(cfg, curves);
  MatchProblem tmpl = cfg.problem_template(sigma);

  fs::create_directories(co.out);
  std::string ckpt_path = (fs::path(co.out) / "checkpoint.jsonl").string();
  std::vector<PairOutcome> done = read_checkpoint(ckpt_path, (int)curves.size());
  if (!done.empty())
    std::fprintf(stderr, "  resuming: %d pairs from %s\n", (int)done.size(), ckpt_path.c_str());

  std::ofstream ckpt(ckpt_path, std::ios::binary | std::ios::app);
  if (!ckpt) throw std::runtime_error(ckpt_path + ": cannot open for appending");
  int total = (int)curves.size() * ((int)curves.size() - 1);
  int finished = (int)done.size();
  PairCallback on_pair = [&](const PairOutcome& p) {
    json j = {{"i", p.i},          {"j", p.j},
              {"distance", p.distance}, {"energy", p.energy},
              {"fidelity", p.fidelity}, {"converged", p.converged}};
    ckpt << j.dump() << "\n";
    ckpt.flush();
    ++finished;
    std::fprintf(stderr, "  [%d/%d] d(%s, %s) = %.6g%s\n", finished, total, names[p.i].c_str(),
                 names[p.j].c_str(), p.distance, p.converged ? "" : " (not converged)");
  };

  DistanceMatrix dm = distance_matrix(curves, tmpl, cfg.jobs, on_pair, done);

  write_matrix_csv((fs::path(co.out) / "distances.csv").string(), names, dm.values);
  json flags;
  flags["config"] = config_to_json(cfg, sigma);
  flags["names"] = names;
  json conv = json::array();
  for (const auto& row : dm.converged) {
    json r = json::array();
    for (bool b : row) r.push_back(b);
    conv.push_back(r);
  }
  flags["converged"] = conv;
  write_json_file((fs::path(co.out) / "flags.json").string(), flags);
  std::printf("wrote %s (%d x %d)\n", (fs::path(co.out) / "distances.csv").string().c_str(),
              dm.size(), dm.size());
  return 0;
}

int cmd_cluster(const Common& co, const std::string& matrix_path, int p, int k) {
  RunConfig cfg = co.load();
  std::vector<std::string> names;
  Eigen::MatrixXd dist = read_matrix_csv(matrix_path, names);
  ClusterResult res = spectral_cluster(dist, p, k, cfg.seed);
  if (res.disconnected_warning)
    std::fprintf(stderr,
                 "warning: neighbor graph has %d components for %d clusters; "
                 "labels follow the components\n",
                 res.num_components, k);

  json out;
  out["matrix"] = matrix_path;
  out["p"] = p;
  out["k"] = k;
  out["seed"] = cfg.seed;
  out["names"] = names;
  out["labels"] = res.labels;
  out["num_components"] = res.num_components;
  out["disconnected_warning"] = res.disconnected_warning;
  json emb = json::array();
  for (int i = 0; i < res.embedding.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < res.embedding.cols(); ++j) row.push_back(res.embedding(i, j));
    emb.push_back(row);
  }
  out["embedding"] = emb;
  write_json_file((fs::path(co.out) / "clusters.json").string(), out);
  for (size_t i = 0; i < names.size(); ++i)
    std::printf("%s %d\n", names[i].c_str(), res.labels[i]);
  return 0;
}

int cmd_mean(const Common& co, const std::string& dataset, bool with_pca) {
  RunConfig cfg = co.load();
  std::vector<NamedCurve> shapes = load_dataset(dataset, cfg.resolution.num_theta);
  std::vector<std::string> names;
  std::vector<SplineCurve> curves;
  for (const NamedCurve& s : shapes) {
    names.push_back(s.name);
    curves.push_back(s.curve);
  }
  double sigma = resolve_sigma(cfg, curves);
  MatchProblem tmpl = cfg.problem_template(sigma);
  MeanResult mean = karcher_mean(curves, tmpl);

  json out;
  out["config"] = config_to_json(cfg, sigma);
  out["names"] = names;
  out["mean"] = curve_block("mean", mean.mean);
  out["energies"] = mean.energies;
  out["fidelities"] = mean.fidelities;
  out["distances"] = mean.distances;
  out["objective"] = mean.objective;
  out["converged"] = mean.converged;
  write_json_file((fs::path(co.out) / "mean.json").string(), out);

  std::vector<std::pair<SplineCurve, std::string>> draw;
  for (const SplineCurve& c : curves) draw.emplace_back(c, "#c8c8c8");
  draw.emplace_back(mean.mean, "#000000");
  write_text_file((fs::path(co.out) / "mean.svg").string(), curves_svg(draw));

  if (with_pca) {
    std::vector<Mat2X> velocities;
    for (const PathControlNet& net : mean.paths) velocities.push_back(log_map(net));
    QuadGrid grid = make_quad_grid(mean.mean.basis, 3, 2);
    PcaResult pca = tangent_pca(mean.mean, velocities, cfg.coeffs, grid);

    json pj;
    pj["config"] = config_to_json(cfg, sigma);
    pj["names"] = names;
    pj["mean"] = curve_block("mean", pca.mean);
    json evs = json::array();
    for (int m = 0; m < pca.eigenvalues.size(); ++m) evs.push_back(pca.eigenvalues[m]);
    pj["eigenvalues"] = evs;
    pj["kept"] = (int)pca.directions.size();
    json dirs = json::array();
    for (const Mat2X& d : pca.directions) dirs.push_back(controls_to_json(d));
    pj["directions"] = dirs;
    write_json_file((fs::path(co.out) / "pca.json").string(), pj);

    std::ostringstream sc;
    sc << "name";
    for (size_t m = 0; m < pca.directions.size(); ++m) sc << ",pc" << (m + 1);
    sc << "\n";
    for (size_t i = 0; i < names.size(); ++i) {
      sc << names[i];
      for (int m = 0; m < pca.scores.cols(); ++m) sc << "," << format_g17(pca.scores((int)i, m));
      sc << "\n";
    }
    write_text_file((fs::path(co.out) / "scores.csv").string(), sc.str());

    std::vector<std::pair<SplineCurve, std::string>> pd;
    pd.emplace_back(pca.mean, "#000000");
    const char* colors[2][2] = {{"#d62728", "#ff9896"}, {"#1f77b4", "#aec7e8"}};
    for (int m = 0; m < std::min<int>(2, (int)pca.directions.size()); ++m) {
      double amp = std::sqrt(std::max(pca.eigenvalues[m], 0.0));
      if (!(amp > 0.0)) continue;
      std::vector<SplineCurve> ends = principal_geodesic_endpoints(pca, m, {amp, -amp});
      pd.emplace_back(ends[0], colors[m][0]);
      pd.emplace_back(ends[1], colors[m][1]);
    }
    write_text_file((fs::path(co.out) / "pca.svg").string(), curves_svg(pd));
    std::printf("kept %d modes; leading eigenvalue %.6g\n", (int)pca.directions.size(),
                pca.eigenvalues.size() ? pca.eigenvalues[0] : 0.0);
  }

  std::printf("mean objective %.6g  converged %s\n", mean.objective,
              mean.converged ? "yes" : "no");
  return mean.converged ? 0 : 2;
}

int cmd_gen_synthetic(const std::string& out_dir, const SyntheticOptions& opts) {
  std::vector<LabeledPolygon> shapes = synthetic_three_class(opts);
  fs::create_directories(out_dir);
  json manifest;
  json files = json::array();
  std::ostringstream labels;
  labels << "name,label\n";
  for (const LabeledPolygon& s : shapes) {
    json j;
    j["name"] = s.name;
    json pts = json::array();
    for (int k = 0; k < s.points.cols(); ++k)
      pts.push_back(json::array({s.points(0, k), s.points(1, k)}));
    j["points"] = pts;
    std::string file = s.name + ".json";
    write_json_file((fs::path(out_dir) / file).string(), j);
    files.push_back(file);
    labels << s.name << "," << s.label << "\n";
  }
  manifest["files"] = files;
  write_json_file((fs::path(out_dir) / "manifest.json").string(), manifest);
  write_text_file((fs::path(out_dir) / "labels.csv").string(), labels.str());
  std::printf("wrote %d curves to %s\n", (int)shapes.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"geodesic distances between closed plane curves under a "
               "second-order Sobolev metric"};
  app.require_subcommand(1);

  Common match_co, matrix_co, cluster_co, mean_co, pca_co;
  std::string source_path, target_path, dataset_path, matrix_path;
  int cluster_p = 12, cluster_k = 3;

  CLI::App* match = app.add_subcommand("match", "geodesic between two curves");
  match->add_option("source", source_path, "source curve JSON")->required()
      ->check(CLI::ExistingFile);
  match->add_option("target", target_path, "target curve JSON")->required()
      ->check(CLI::ExistingFile);
  match_co.attach(match);

  CLI::App* matrix = app.add_subcommand("matrix", "pairwise distance matrix for a dataset");
  matrix->add_option("dataset", dataset_path, "dataset directory or manifest JSON")->required();
  matrix_co.attach(matrix);

  CLI::App* cluster = app.add_subcommand("cluster", "spectral clustering of a distance matrix");
  cluster->add_option("--matrix", matrix_path, "distance matrix CSV")->required()
      ->check(CLI::ExistingFile);
  cluster->add_option("--p", cluster_p, "neighbors per shape");
  cluster->add_option("--k", cluster_k, "number of clusters");
  cluster_co.attach(cluster);

  CLI::App* mean = app.add_subcommand("mean", "Karcher mean of a dataset");
  mean->add_option("dataset", dataset_path, "dataset directory or manifest JSON")->required();
  mean_co.attach(mean);

  CLI::App* pca = app.add_subcommand("pca", "mean plus tangent-space PCA of a dataset");
  pca->add_option("dataset", dataset_path, "dataset directory or manifest JSON")->required();
  pca_co.attach(pca);

  CLI::App* gen = app.add_subcommand("gen-synthetic", "write a labeled synthetic dataset");
  SyntheticOptions gen_opts;
  std::string gen_out = "data";
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gen_opts.seed, "RNG seed");
  gen->add_option("--per-class", gen_opts.per_class, "shapes per class")
      ->check(CLI::PositiveNumber);
  gen->add_option("--points", gen_opts.points, "polygon vertices per shape")
      ->check(CLI::Range(8, 100000));
  gen->add_option("--perturbation", gen_opts.perturbation, "radial perturbation amplitude");

  std::vector<const char*> argv;
  argv.push_back("curvematch");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse((int)argv.size(), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (match->parsed()) return cmd_match(match_co, source_path, target_path);
    if (matrix->parsed()) return cmd_matrix(matrix_co, dataset_path);
    if (cluster->parsed()) return cmd_cluster(cluster_co, matrix_path, cluster_p, cluster_k);
    if (mean->parsed()) return cmd_mean(mean_co, dataset_path, false);
    if (pca->parsed()) return cmd_mean(pca_co, dataset_path, true);
    if (gen->parsed()) return cmd_gen_synthetic(gen_out, gen_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace curvematch
