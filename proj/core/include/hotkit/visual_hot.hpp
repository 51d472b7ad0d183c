#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hotkit/hypergraph.hpp"
#include "hotkit/numerics.hpp"

namespace hotkit {

struct KMeansConfig {
  std::size_t m = 8;  // clusters == image hyperedges
  std::size_t max_iters = 100;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  /// After Lloyd converges, apply single-point transfers that lower the SSE
  /// until none is left. Escapes many Lloyd fixed points on small inputs.
  bool transfer_refinement = true;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;  // per patch
  Matrix centroids;                      // m × d
  double objective = 0.0;                // total within-cluster SSE
  std::vector<double> objective_trace;   // after every assignment step
  std::size_t iterations = 0;
  std::size_t repairs = 0;  // empty clusters relocated
  std::size_t transfer_sweeps = 0;  // refinement sweeps that moved a point
};

/// Lloyd's algorithm from seeded k-means++ centers. Distance ties go to the
/// lowest cluster index. An empty cluster's centroid is moved onto the point
/// farthest from its own centroid, which joins the empty cluster. Stops after
/// max_iters or when the relative objective decrease falls below rel_tol,
/// then optionally refines by single-point transfers. On return the centroids
/// are the means of their clusters; once refinement converges every point is
/// also nearest its own centroid.
KMeansResult kmeans(const Matrix& patches, const KMeansConfig& cfg);

/// m hyperedges partitioning the p patch vertices; edge j holds cluster j.
Hypergraph build_visual_hot(const Matrix& patches, const KMeansConfig& cfg,
                            KMeansResult* details = nullptr);

/// Sum of squared distances from each point to its assigned centroid.
double kmeans_objective(const Matrix& patches, const Matrix& centroids,
                        const std::vector<std::size_t>& assignments);

}  // namespace hotkit
