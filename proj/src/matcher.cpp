#include "curvematch/matcher.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "curvematch/errors.hpp"
#include "curvematch/fit.hpp"

namespace curvematch {

void MatchProblem::validate() const {
  coeffs.validate();
  if (!(coeffs.a2 > 0.0))
    throw std::invalid_argument("match problem: a2 must be positive for matching");
  kernel.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("match problem: lambda must be positive");
  if (resolution.num_time < 3 || resolution.num_theta < 6 || resolution.samples < 3)
    throw std::invalid_argument("match problem: resolution below minimum");
  opt.lbfgs.validate();
  effective_levels();
}

std::vector<Level> MatchProblem::effective_levels() const {
  std::vector<Level> levels = opt.levels;
  if (levels.empty() || !(levels.back() == resolution)) levels.push_back(resolution);
  for (size_t i = 0; i < levels.size(); ++i) {
    const Level& l = levels[i];
    if (l.num_time < 3 || l.num_theta < 6 || l.samples < 3)
      throw std::invalid_argument("match problem: level below minimum resolution");
    if (i > 0) {
      const Level& p = levels[i - 1];
      const bool nondecr =
          l.num_time >= p.num_time && l.num_theta >= p.num_theta && l.samples >= p.samples;
      const bool finer =
          l.num_time > p.num_time || l.num_theta > p.num_theta || l.samples > p.samples;
      if (!nondecr || !finer)
        throw std::invalid_argument("match problem: levels must increase in resolution");
    }
  }
  return levels;
}

MatchObjective::MatchObjective(const MatchProblem& problem, const Level& level)
    : problem_(problem), level_(level) {
  auto bases = make_bases(level.num_time, level.num_theta);
  time_basis_ = bases.first;
  theta_basis_ = bases.second;
  quad_ = make_path_quadrature(time_basis_, theta_basis_);
  source_ = refit_curve(problem.source, level.num_theta);
  target_ = refit_curve(problem.target, level.num_theta);
  target_verts_ = sample_polygon(target_, level.samples).vertices();
}

int MatchObjective::dim() const {
  return 2 * (level_.num_time - 1) * level_.num_theta + (problem_.rigid_enabled ? 3 : 0);
}

PathControlNet MatchObjective::constant_net() const {
  return PathControlNet::constant(time_basis_, source_);
}

RigidMotion MatchObjective::initial_alignment() const {
  RigidMotion align;
  if (problem_.rigid_enabled) {
    const Mat2X src = sample_polygon(source_, level_.samples).vertices();
    align.translation = src.rowwise().mean() - target_verts_.rowwise().mean();
  }
  return align;
}

Eigen::VectorXd MatchObjective::pack(const PathControlNet& net, const RigidMotion& align) const {
  const int nt = level_.num_time, nq = level_.num_theta;
  Eigen::VectorXd x(dim());
  for (int i = 1; i < nt; ++i)
    for (int j = 0; j < nq; ++j) {
      const int base = 2 * ((i - 1) * nq + j);
      x[base] = net.rows[i](0, j);
      x[base + 1] = net.rows[i](1, j);
    }
  if (problem_.rigid_enabled) {
    x[dim() - 3] = align.angle;
    x[dim() - 2] = align.translation.x();
    x[dim() - 1] = align.translation.y();
  }
  return x;
}

void MatchObjective::unpack(const Eigen::VectorXd& x, PathControlNet& net,
                            RigidMotion& align) const {
  const int nt = level_.num_time, nq = level_.num_theta;
  net.time_basis = time_basis_;
  net.theta_basis = theta_basis_;
  net.rows.assign(nt, Mat2X(2, nq));
  net.rows[0] = source_.controls;
  for (int i = 1; i < nt; ++i)
    for (int j = 0; j < nq; ++j) {
      const int base = 2 * ((i - 1) * nq + j);
      net.rows[i](0, j) = x[base];
      net.rows[i](1, j) = x[base + 1];
    }
  align = RigidMotion{};
  if (problem_.rigid_enabled) {
    align.angle = x[dim() - 3];
    align.translation = Vec2(x[dim() - 2], x[dim() - 1]);
  }
}

double MatchObjective::energy(const PathControlNet& net) const {
  return path_energy(net, problem_.coeffs, quad_);
}

double MatchObjective::fidelity(const PathControlNet& net, const RigidMotion& align) const {
  const PolygonalCurve end = sample_polygon({theta_basis_, net.rows.back()}, level_.samples);
  const Eigen::Matrix2d a = align.rotation();
  const Mat2X moved = (a * target_verts_).colwise() + align.translation;
  return varifold_dist_sq(end, PolygonalCurve(moved), problem_.kernel);
}

double MatchObjective::eval(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  grad.setZero(dim());
  PathControlNet net;
  RigidMotion align;
  unpack(x, net, align);
  const int nt = level_.num_time, nq = level_.num_theta;

  try {
    std::vector<Mat2X> egrad;
    const double energy = path_energy_gradient(net, problem_.coeffs, quad_, egrad);

    const SplineCurve end{theta_basis_, net.rows.back()};
    const PolygonalCurve end_poly = sample_polygon(end, level_.samples);
    const Eigen::Matrix2d a = align.rotation();
    const Mat2X moved = (a * target_verts_).colwise() + align.translation;
    const PolygonalCurve aligned_target(moved);

    Mat2X end_vgrad;
    const double fid =
        varifold_dist_sq_vertex_grad(end_poly, aligned_target, problem_.kernel, end_vgrad);
    const Mat2X end_cgrad = end_poly.chain_to_controls(end_vgrad);

    for (int i = 1; i < nt; ++i) {
      Mat2X g = egrad[i];
      if (i == nt - 1) g += problem_.lambda * end_cgrad;
      for (int j = 0; j < nq; ++j) {
        const int base = 2 * ((i - 1) * nq + j);
        grad[base] = g(0, j);
        grad[base + 1] = g(1, j);
      }
    }

    if (problem_.rigid_enabled) {
      // Alignment enters only through -2 lambda <end, moved target>; the
      // aligned target's self inner product is rigid-invariant.
      Mat2X tgrad;
      varifold_inner_grad(aligned_target, end_poly, problem_.kernel, tgrad);
      tgrad *= -2.0 * problem_.lambda;
      double dangle = 0.0;
      Vec2 db = Vec2::Zero();
      for (int l = 0; l < (int)moved.cols(); ++l) {
        const Vec2 g = tgrad.col(l);
        const Vec2 r = moved.col(l) - align.translation;  // A * y_l
        dangle += g.x() * (-r.y()) + g.y() * r.x();
        db += g;
      }
      grad[dim() - 3] = dangle;
      grad[dim() - 2] = db.x();
      grad[dim() - 1] = db.y();
    }

    return energy + problem_.lambda * fid;
  } catch (const DegenerateCurve&) {
    grad.setZero(dim());
    return std::numeric_limits<double>::infinity();
  }
}

double objective_and_gradient(const MatchProblem& problem, const PathControlNet& net,
                              const RigidMotion& align, std::vector<Mat2X>& net_grad,
                              double& angle_grad, Vec2& translation_grad) {
  MatchObjective obj(problem, problem.resolution);
  Eigen::VectorXd grad;
  const double f = obj.eval(obj.pack(net, align), grad);
  const int nt = problem.resolution.num_time, nq = problem.resolution.num_theta;
  net_grad.assign(nt, Mat2X::Zero(2, nq));
  for (int i = 1; i < nt; ++i)
    for (int j = 0; j < nq; ++j) {
      const int base = 2 * ((i - 1) * nq + j);
      net_grad[i](0, j) = grad[base];
      net_grad[i](1, j) = grad[base + 1];
    }
  angle_grad = 0.0;
  translation_grad = Vec2::Zero();
  if (problem.rigid_enabled) {
    angle_grad = grad[grad.size() - 3];
    translation_grad = Vec2(grad[grad.size() - 2], grad[grad.size() - 1]);
  }
  return f;
}

namespace {

// Least-squares re-fit of dense samples on a clamped basis; rows of `samples`
// are sample points, one column set per right-hand side.
Eigen::MatrixXd clamped_lsq(const SplineBasis& basis, const Eigen::VectorXd& ts,
                            const Eigen::MatrixXd& samples) {
  const int m = (int)ts.size(), n = basis.num_controls();
  Eigen::MatrixXd design(m, n);
  for (int r = 0; r < m; ++r) design.row(r) = basis.dense_row(ts[r], 0).transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(design.transpose() * design);
  if (ldlt.info() != Eigen::Success) throw RankDeficient("prolong_net: time refit failed");
  return ldlt.solve(design.transpose() * samples);
}

}  // namespace

PathControlNet prolong_net(const PathControlNet& coarse, const SplineBasis& fine_time,
                           const SplineBasis& fine_theta, const Mat2X& fine_source_controls) {
  const int nt_c = coarse.num_time_controls();
  const int nt_f = fine_time.num_controls();
  const int nq_f = fine_theta.num_controls();

  // Re-fit each coarse row at the fine theta resolution.
  std::vector<Mat2X> wide(nt_c);
  for (int i = 0; i < nt_c; ++i)
    wide[i] = refit_curve({coarse.theta_basis, coarse.rows[i]}, nq_f).controls;

  PathControlNet fine;
  fine.time_basis = fine_time;
  fine.theta_basis = fine_theta;
  fine.rows.assign(nt_f, Mat2X::Zero(2, nq_f));

  if (nt_f == nt_c && fine_time.degree() == coarse.time_basis.degree()) {
    fine.rows = std::move(wide);
  } else {
    // Dense time samples of every theta-control coefficient, then one shared
    // least-squares solve on the fine time basis.
    const int mt = std::max(4 * nt_f, 40);
    Eigen::VectorXd ts(mt);
    for (int r = 0; r < mt; ++r) ts[r] = (double)r / (mt - 1);
    Eigen::MatrixXd samples(mt, 2 * nq_f);
    for (int r = 0; r < mt; ++r) {
      Eigen::VectorXd row = coarse.time_basis.dense_row(ts[r], 0);
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(2 * nq_f);
      for (int i = 0; i < nt_c; ++i) {
        const auto& w = wide[i];
        for (int j = 0; j < nq_f; ++j) {
          acc[2 * j] += row[i] * w(0, j);
          acc[2 * j + 1] += row[i] * w(1, j);
        }
      }
      samples.row(r) = acc;
    }
    Eigen::MatrixXd sol = clamped_lsq(fine_time, ts, samples);
    for (int i = 0; i < nt_f; ++i)
      for (int j = 0; j < nq_f; ++j) fine.rows[i].col(j) = Vec2(sol(i, 2 * j), sol(i, 2 * j + 1));
  }

  fine.rows[0] = fine_source_controls;
  return fine;
}

MatchResult solve_match(const MatchProblem& problem) {
  problem.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const std::vector<Level> levels = problem.effective_levels();

  MatchResult result;
  PathControlNet net;
  RigidMotion align;
  bool have_net = false;

  for (size_t li = 0; li < levels.size(); ++li) {
    MatchObjective obj(problem, levels[li]);
    if (!have_net) {
      net = obj.constant_net();
      align = obj.initial_alignment();
      have_net = true;
    } else {
      net = prolong_net(net, obj.time_basis(), obj.theta_basis(), obj.source().controls);
    }

    // The gradient target is anchored at this level's canonical constant-path
    // start, not at the warm-started iterate, so a multigrid fine level faces
    // the same bar as a cold single-level solve.
    Eigen::VectorXd g_ref(obj.dim());
    obj.eval(obj.pack(obj.constant_net(), obj.initial_alignment()), g_ref);
    LbfgsSettings ls = problem.opt.lbfgs;
    ls.g_tol_abs = std::max(ls.g_tol_abs, ls.g_tol_rel * g_ref.norm());
    ls.g_tol_rel = 0.0;
    LbfgsResult r = lbfgs_minimize([&obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      return obj.eval(x, g);
    }, obj.pack(net, align), ls);
    if (r.reason == StopReason::non_finite)
      throw MatchFailure((int)li, "objective not finite at level initialization");
    obj.unpack(r.x, net, align);

    LevelTrace trace;
    trace.level = levels[li];
    trace.iterations = r.iterations;
    trace.reason = r.reason;
    trace.objective_history = std::move(r.f_history);
    trace.grad_norm_history = std::move(r.grad_norm_history);
    result.levels.push_back(std::move(trace));

    if (li + 1 == levels.size()) {
      result.net = net;
      result.rigid = problem.rigid_enabled ? align.inverse() : RigidMotion{};
      result.energy = obj.energy(net);
      result.fidelity = obj.fidelity(net, align);
      result.objective = result.energy + problem.lambda * result.fidelity;
      result.geodesic_distance = path_length(net, problem.coeffs, obj.quadrature());
      result.converged = r.reason == StopReason::gradient_tolerance;
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

std::vector<SplineCurve> geodesic_snapshots(const MatchResult& result,
                                            const std::vector<double>& times) {
  std::vector<SplineCurve> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(result.net.curve_at(t));
  return out;
}

}  // namespace curvematch
