#include "curvematch/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "curvematch/errors.hpp"
#include "curvematch/fit.hpp"
#include "curvematch/rng.hpp"

namespace curvematch {

namespace {

MatchProblem pair_problem(const MatchProblem& tmpl, const SplineCurve& src,
                          const SplineCurve& tgt) {
  MatchProblem p = tmpl;
  p.source = src;
  p.target = tgt;
  return p;
}

}  // namespace

DistanceMatrix distance_matrix(const std::vector<SplineCurve>& shapes, const MatchProblem& tmpl,
                               int jobs, const PairCallback& on_pair,
                               const std::vector<PairOutcome>& precomputed) {
  const int n = (int)shapes.size();
  if (n < 2) throw std::invalid_argument("distance_matrix: need at least two shapes");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd vals = Eigen::MatrixXd::Constant(n, n, nan);
  std::vector<std::vector<bool>> flags(n, std::vector<bool>(n, false));
  vals.diagonal().setZero();
  for (int i = 0; i < n; ++i) flags[i][i] = true;

  for (const PairOutcome& p : precomputed) {
    if (p.i < 0 || p.i >= n || p.j < 0 || p.j >= n || p.i == p.j) continue;
    vals(p.i, p.j) = p.distance;
    flags[p.i][p.j] = p.converged;
  }

  std::vector<std::pair<int, int>> tasks;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::isnan(vals(i, j))) tasks.emplace_back(i, j);

  std::atomic<size_t> next{0};
  std::mutex emit_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t id = next.fetch_add(1);
      if (id >= tasks.size()) return;
      const auto [i, j] = tasks[id];
      PairOutcome out;
      out.i = i;
      out.j = j;
      try {
        MatchResult r = solve_match(pair_problem(tmpl, shapes[i], shapes[j]));
        out.distance = r.geodesic_distance;
        out.energy = r.energy;
        out.fidelity = r.fidelity;
        out.converged = r.converged;
      } catch (const std::exception&) {
        out.distance = nan;
        out.converged = false;
      }
      vals(i, j) = out.distance;
      flags[i][j] = out.converged;
      if (on_pair) {
        std::lock_guard<std::mutex> lock(emit_mutex);
        on_pair(out);
      }
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, (int)tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  DistanceMatrix dm;
  dm.converged = std::move(flags);
  dm.values = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double a = vals(i, j), b = vals(j, i);
      double d;
      if (std::isfinite(a) && std::isfinite(b)) d = 0.5 * (a + b);
      else if (std::isfinite(a)) d = a;
      else if (std::isfinite(b)) d = b;
      else
        throw MatchFailure(0, "distance_matrix: both directions failed for a pair");
      dm.values(i, j) = dm.values(j, i) = d;
    }
  }
  return dm;
}

namespace {

// Canonical shape order from the distance profile: permutation invariance of
// the clustering comes from doing all arithmetic in this order.  Ties in the
// sorted profiles only arise for duplicated shapes, which are interchangeable.
std::vector<int> canonical_order(const Eigen::MatrixXd& dist) {
  const int n = (int)dist.rows();
  std::vector<std::vector<double>> keys(n);
  for (int i = 0; i < n; ++i) {
    keys[i].reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) keys[i].push_back(dist(i, j));
    std::sort(keys[i].begin(), keys[i].end());
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return a < b;
  });
  return order;
}

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return (a - b).squaredNorm();
}

// Seeded k-means++ with Lloyd iterations; returns labels for the rows of x.
std::vector<int> kmeans(const Eigen::MatrixXd& x, int k, Rng& rng, int restarts, int max_iter) {
  const int n = (int)x.rows();
  std::vector<int> best_labels(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int rs = 0; rs < restarts; ++rs) {
    // k-means++ seeding.
    Eigen::MatrixXd centers(k, x.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    centers.row(0) = x.row(rng.index(n));
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c - 1)));
        total += d2[i];
      }
      int pick = 0;
      if (total > 0.0) {
        const double u = rng.unit() * total;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc >= u) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.index(n);
      }
      centers.row(c) = x.row(pick);
    }

    std::vector<int> labels(n, -1);
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best = sq_dist(x.row(i), centers.row(0));
        for (int c = 1; c < k; ++c) {
          const double d = sq_dist(x.row(i), centers.row(c));
          if (d < best) {
            best = d;
            arg = c;
          }
        }
        if (arg != labels[i]) {
          labels[i] = arg;
          changed = true;
        }
      }
      if (!changed && it > 0) break;

      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(labels[i]) += x.row(i);
        ++counts[labels[i]];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(c) = sums.row(c) / counts[c];
        } else {
          // Re-seed an empty cluster at the point farthest from its center.
          int far = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double d = sq_dist(x.row(i), centers.row(labels[i]));
            if (d > far_d) {
              far_d = d;
              far = i;
            }
          }
          centers.row(c) = x.row(far);
        }
      }
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += sq_dist(x.row(i), centers.row(labels[i]));
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

}  // namespace

ClusterResult spectral_cluster(const Eigen::MatrixXd& dist, int p, int k, std::uint64_t seed) {
  const int n = (int)dist.rows();
  if (dist.cols() != n) throw std::invalid_argument("spectral_cluster: matrix must be square");
  if (n < 2) throw std::invalid_argument("spectral_cluster: need at least two shapes");
  if (p < 1 || p >= n) throw std::invalid_argument("spectral_cluster: need 1 <= p < n");
  if (k < 1 || k > n) throw std::invalid_argument("spectral_cluster: need 1 <= k <= n");
  const double span = std::max(1.0, dist.cwiseAbs().maxCoeff());
  if (dist.minCoeff() < -1e-12 * span)
    throw std::invalid_argument("spectral_cluster: distances must be non-negative");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(dist(i, j) - dist(j, i)) > 1e-12 * span)
        throw std::invalid_argument("spectral_cluster: matrix must be symmetric");

  const std::vector<int> order = canonical_order(dist);
  std::vector<int> place(n);  // original index -> canonical position
  for (int pos = 0; pos < n; ++pos) place[order[pos]] = pos;

  Eigen::MatrixXd d(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) d(a, b) = dist(order[a], order[b]);

  // p nearest neighbours per row, "either" symmetrization, binary weights.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx;
    idx.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
      return a < b;
    });
    for (int m = 0; m < p; ++m) w(i, idx[m]) = w(idx[m], i) = 1.0;
  }

  // Connected components by scan (guards k-means against split spectra).
  std::vector<int> comp(n, -1);
  int num_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = num_comp;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < n; ++u)
        if (w(v, u) > 0.0 && comp[u] < 0) {
          comp[u] = num_comp;
          stack.push_back(u);
        }
    }
    ++num_comp;
  }

  Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv[i] = deg[i] > 0.0 ? 1.0 / std::sqrt(deg[i]) : 0.0;
  Eigen::MatrixXd lsym = Eigen::MatrixXd::Identity(n, n) -
                         dinv.asDiagonal() * w * dinv.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lsym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("spectral_cluster: eigendecomposition failed");
  Eigen::MatrixXd u = eig.eigenvectors().leftCols(k);

  // Deterministic eigenvector signs: cubes break the symmetric case, plain
  // sum as fallback.
  for (int c = 0; c < k; ++c) {
    const double s3 = u.col(c).array().cube().sum();
    const double s1 = u.col(c).sum();
    if (s3 < -1e-12 || (std::abs(s3) <= 1e-12 && s1 < -1e-12)) u.col(c) = -u.col(c);
  }
  for (int i = 0; i < n; ++i) {
    const double len = u.row(i).norm();
    if (len > 0.0) u.row(i) /= len;
  }

  Rng rng(seed);
  std::vector<int> canon_labels = kmeans(u, k, rng, 20, 100);

  // Stable label ids: first occurrence in canonical order.
  std::vector<int> remap(k, -1);
  int next_id = 0;
  for (int pos = 0; pos < n; ++pos)
    if (remap[canon_labels[pos]] < 0) remap[canon_labels[pos]] = next_id++;

  ClusterResult res;
  res.labels.resize(n);
  res.embedding.resize(n, k);
  res.graph.assign(n, {});
  for (int i = 0; i < n; ++i) {
    res.labels[i] = remap[canon_labels[place[i]]];
    res.embedding.row(i) = u.row(place[i]);
    for (int j = 0; j < n; ++j)
      if (w(place[i], place[j]) > 0.0) res.graph[i].push_back(j);
    std::sort(res.graph[i].begin(), res.graph[i].end());
  }
  res.num_components = num_comp;
  res.disconnected_warning = num_comp > k;
  return res;
}

MeanResult karcher_mean(const std::vector<SplineCurve>& shapes, const MatchProblem& tmpl) {
  if (shapes.empty()) throw std::invalid_argument("karcher_mean: need at least one shape");
  tmpl.coeffs.validate();
  tmpl.kernel.validate();
  const int n = (int)shapes.size();
  const Level res = tmpl.resolution;
  auto bases = make_bases(res.num_time, res.num_theta);
  const SplineBasis& tb = bases.first;
  const SplineBasis& qb = bases.second;
  const PathQuadrature quad = make_path_quadrature(tb, qb);
  const int nt = res.num_time, nq = res.num_theta;

  std::vector<SplineCurve> fitted;
  std::vector<PolygonalCurve> targets;
  fitted.reserve(n);
  targets.reserve(n);
  for (const SplineCurve& s : shapes) {
    fitted.push_back(refit_curve(s, nq));
    targets.push_back(sample_polygon(fitted.back(), res.samples));
  }

  Mat2X mean0 = Mat2X::Zero(2, nq);
  for (const SplineCurve& s : fitted) mean0 += s.controls;
  mean0 /= (double)n;

  // Layout: mean controls, then rows 2..N_t of each shape's net.
  const int mean_len = 2 * nq;
  const int row_len = 2 * nq;
  const int net_len = (nt - 1) * row_len;
  const int dim = mean_len + n * net_len;

  auto unpack = [&](const Eigen::VectorXd& x, Mat2X& mean, std::vector<PathControlNet>& nets) {
    mean.resize(2, nq);
    for (int j = 0; j < nq; ++j) mean.col(j) = Vec2(x[2 * j], x[2 * j + 1]);
    nets.assign(n, PathControlNet{});
    for (int s = 0; s < n; ++s) {
      PathControlNet& net = nets[s];
      net.time_basis = tb;
      net.theta_basis = qb;
      net.rows.assign(nt, Mat2X(2, nq));
      net.rows[0] = mean;
      for (int i = 1; i < nt; ++i)
        for (int j = 0; j < nq; ++j) {
          const int base = mean_len + s * net_len + (i - 1) * row_len + 2 * j;
          net.rows[i].col(j) = Vec2(x[base], x[base + 1]);
        }
    }
  };

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    grad.setZero(dim);
    Mat2X mean;
    std::vector<PathControlNet> nets;
    unpack(x, mean, nets);
    double total = 0.0;
    try {
      for (int s = 0; s < n; ++s) {
        std::vector<Mat2X> egrad;
        total += path_energy_gradient(nets[s], tmpl.coeffs, quad, egrad);

        const PolygonalCurve end = sample_polygon({qb, nets[s].rows.back()}, res.samples);
        Mat2X vgrad;
        const double fid = varifold_dist_sq_vertex_grad(end, targets[s], tmpl.kernel, vgrad);
        total += tmpl.lambda * fid;
        const Mat2X cgrad = end.chain_to_controls(vgrad);

        for (int j = 0; j < nq; ++j) {
          grad[2 * j] += egrad[0](0, j);
          grad[2 * j + 1] += egrad[0](1, j);
        }
        for (int i = 1; i < nt; ++i) {
          Mat2X g = egrad[i];
          if (i == nt - 1) g += tmpl.lambda * cgrad;
          for (int j = 0; j < nq; ++j) {
            const int base = mean_len + s * net_len + (i - 1) * row_len + 2 * j;
            grad[base] = g(0, j);
            grad[base + 1] = g(1, j);
          }
        }
      }
      return total;
    } catch (const DegenerateCurve&) {
      grad.setZero(dim);
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd x0(dim);
  for (int j = 0; j < nq; ++j) {
    x0[2 * j] = mean0(0, j);
    x0[2 * j + 1] = mean0(1, j);
  }
  for (int s = 0; s < n; ++s)
    for (int i = 1; i < nt; ++i)
      for (int j = 0; j < nq; ++j) {
        const int base = mean_len + s * net_len + (i - 1) * row_len + 2 * j;
        x0[base] = mean0(0, j);
        x0[base + 1] = mean0(1, j);
      }

  LbfgsResult r = lbfgs_minimize(objective, x0, tmpl.opt.lbfgs);
  if (r.reason == StopReason::non_finite)
    throw MatchFailure(0, "karcher_mean: objective not finite at initialization");

  MeanResult out;
  Mat2X mean;
  std::vector<PathControlNet> nets;
  unpack(r.x, mean, nets);
  out.mean = SplineCurve{qb, mean};
  out.paths = std::move(nets);
  out.objective = r.f;
  out.converged = r.reason == StopReason::gradient_tolerance;
  for (int s = 0; s < n; ++s) {
    out.energies.push_back(path_energy(out.paths[s], tmpl.coeffs, quad));
    const PolygonalCurve end = sample_polygon({qb, out.paths[s].rows.back()}, res.samples);
    out.fidelities.push_back(varifold_dist_sq(end, targets[s], tmpl.kernel));
    out.distances.push_back(path_length(out.paths[s], tmpl.coeffs, quad));
  }
  return out;
}

Mat2X log_map(const PathControlNet& net) {
  SplineBasis::Local loc = net.time_basis.eval_local(net.time_basis.domain_start(), 1);
  Mat2X v = Mat2X::Zero(2, net.num_theta_controls());
  for (int a = 0; a <= net.time_basis.degree(); ++a)
    v += loc.ders(1, a) * net.rows[net.time_basis.control_of(loc.first, a)];
  return v;
}

PcaResult tangent_pca(const SplineCurve& mean, const std::vector<Mat2X>& velocities,
                      const MetricCoefficients& coeffs, const QuadGrid& theta_grid) {
  const int n = (int)velocities.size();
  if (n < 2) throw std::invalid_argument("tangent_pca: need at least two tangent vectors");

  PcaResult out;
  out.mean = mean;
  out.mean_velocity = Mat2X::Zero(2, mean.basis.num_controls());
  for (const Mat2X& v : velocities) out.mean_velocity += v;
  out.mean_velocity /= (double)n;

  std::vector<Mat2X> centered;
  centered.reserve(n);
  for (const Mat2X& v : velocities) centered.push_back(v - out.mean_velocity);

  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      gram(i, j) = gram(j, i) = metric_inner(mean, centered[i], centered[j], coeffs, theta_grid);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("tangent_pca: eigensolver failed");

  // Ascending from Eigen; report non-increasing.
  out.eigenvalues = eig.eigenvalues().reverse();
  // Rank cut floors at the mean squared field norm, not just the leading
  // eigenvalue, so cancellation residue from identical inputs is not promoted
  // to a direction. E|v|^2 = |v_bar|^2 + trace(K)/n.
  const double scale =
      metric_inner(mean, out.mean_velocity, out.mean_velocity, coeffs, theta_grid) +
      gram.trace() / n;
  const double tol = 1e-12 * std::max({out.eigenvalues[0], scale, 1e-300});
  int rank = 0;
  while (rank < n && out.eigenvalues[rank] > tol) ++rank;

  out.scores.resize(n, rank);
  for (int m = 0; m < rank; ++m) {
    Eigen::VectorXd alpha = eig.eigenvectors().col(n - 1 - m);
    // Deterministic sign: largest-magnitude entry positive.
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(alpha[i]) > std::abs(alpha[arg])) arg = i;
    if (alpha[arg] < 0.0) alpha = -alpha;

    const double lambda = out.eigenvalues[m];
    Mat2X dir = Mat2X::Zero(2, mean.basis.num_controls());
    for (int j = 0; j < n; ++j) dir += alpha[j] * centered[j];
    dir /= std::sqrt(lambda);
    out.directions.push_back(std::move(dir));
    for (int j = 0; j < n; ++j) out.scores(j, m) = std::sqrt(lambda) * alpha[j];
  }
  return out;
}

std::vector<SplineCurve> principal_geodesic_endpoints(const PcaResult& pca, int direction,
                                                      const std::vector<double>& amplitudes) {
  if (direction < 0 || direction >= (int)pca.directions.size())
    throw std::invalid_argument("principal_geodesic_endpoints: no such direction");
  std::vector<SplineCurve> out;
  out.reserve(amplitudes.size());
  for (double a : amplitudes)
    out.push_back({pca.mean.basis, pca.mean.controls + a * pca.directions[direction]});
  return out;
}

}  // namespace curvematch
