#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "curvematch/matcher.hpp"
#include "curvematch/metric.hpp"
#include "curvematch/spline.hpp"
#include "curvematch/types.hpp"

namespace curvematch {

struct DistanceMatrix {
  Eigen::MatrixXd values;                    // symmetrized, zero diagonal
  std::vector<std::vector<bool>> converged;  // per ordered entry (i -> j)
  int size() const { return (int)values.rows(); }
};

// One completed ordered pair; streamed to the callback as soon as it is done
// (checkpointing) and accepted back as precomputed work on resume.
struct PairOutcome {
  int i = 0, j = 0;
  double distance = 0.0;
  double energy = 0.0;
  double fidelity = 0.0;
  bool converged = false;
};

using PairCallback = std::function<void(const PairOutcome&)>;

// All ordered pairwise matches under the template problem (source/target are
// replaced per pair), then symmetrization (d_ij + d_ji)/2.  `jobs` workers
// split the pair list; per-entry results are deterministic regardless of the
// worker count.  Entries whose solve throws are retried from the transpose
// entry and otherwise rethrown.
DistanceMatrix distance_matrix(const std::vector<SplineCurve>& shapes, const MatchProblem& tmpl,
                               int jobs = 1, const PairCallback& on_pair = nullptr,
                               const std::vector<PairOutcome>& precomputed = {});

struct ClusterResult {
  std::vector<int> labels;
  Eigen::MatrixXd embedding;            // n x k, row-normalized spectral coordinates
  std::vector<std::vector<int>> graph;  // p-NN adjacency ("either" symmetrization)
  int num_components = 1;
  bool disconnected_warning = false;  // more components than clusters
};

// Jordan-Weiss normalized spectral clustering on a symmetric distance matrix:
// binary p-NN graph, L_sym = I - D^{-1/2} W D^{-1/2}, first k eigenvectors
// row-normalized, then seeded k-means++ (20 restarts).  The partition is
// invariant under permutation of the input rows.
ClusterResult spectral_cluster(const Eigen::MatrixXd& dist, int p, int k, std::uint64_t seed);

struct MeanResult {
  SplineCurve mean;
  std::vector<PathControlNet> paths;  // mean -> shape j, sharing the mean as row 1
  std::vector<double> energies;
  std::vector<double> fidelities;
  std::vector<double> distances;  // path lengths
  double objective = 0.0;
  bool converged = false;
};

// Karcher mean under the relaxed functional: one joint minimization of
// sum_j E(net_j) + lambda d^2(net_j(1), shape_j) over a shared source row.
// The template's rigid flag is ignored; the mean is computed in the fixed
// frame of the dataset.
MeanResult karcher_mean(const std::vector<SplineCurve>& shapes, const MatchProblem& tmpl);

// Initial velocity of a path: coefficient field of d/dt c(0, .), a fixed
// linear combination of control rows given by the time-basis derivative.
Mat2X log_map(const PathControlNet& net);

struct PcaResult {
  SplineCurve mean;
  Mat2X mean_velocity;           // average of the input fields
  std::vector<Mat2X> directions;  // G-orthonormal coefficient fields, one per kept mode
  Eigen::VectorXd eigenvalues;    // all modes, non-increasing
  Eigen::MatrixXd scores;         // n x kept, G-projections onto the directions
};

// PCA of tangent fields under the metric at the mean, via the Gram matrix
// K_jl = G(v_j - vbar, v_l - vbar).
PcaResult tangent_pca(const SplineCurve& mean, const std::vector<Mat2X>& velocities,
                      const MetricCoefficients& coeffs, const QuadGrid& theta_grid);

// First-order displacements mean + alpha * direction; no exponential map.
std::vector<SplineCurve> principal_geodesic_endpoints(const PcaResult& pca, int direction,
                                                      const std::vector<double>& amplitudes);

}  // namespace curvematch
