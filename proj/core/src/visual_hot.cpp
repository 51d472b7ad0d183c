#include "hotkit/visual_hot.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hotkit {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

std::size_t nearest(std::span<const double> point, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Matrix seed_plus_plus(const Matrix& pts, std::size_t m, SplitMix64& rng) {
  const std::size_t p = pts.rows();
  Matrix centroids(m, pts.cols());
  auto place = [&](std::size_t c, std::size_t point) {
    auto src = pts.row(point);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  };
  place(0, rng.choice(p));
  std::vector<double> d2(p);
  for (std::size_t i = 0; i < p; ++i) d2[i] = squared_distance(pts.row(i), centroids.row(0));
  for (std::size_t c = 1; c < m; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = p - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;  // rounding fallback: last positive-weight point
        acc += d2[i];
        if (acc > target) break;
      }
    } else {
      pick = rng.choice(p);
    }
    place(c, pick);
    for (std::size_t i = 0; i < p; ++i)
      d2[i] = std::min(d2[i], squared_distance(pts.row(i), centroids.row(c)));
  }
  return centroids;
}

void assign_all(const Matrix& pts, const Matrix& centroids, std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < pts.rows(); ++i) out[i] = nearest(pts.row(i), centroids);
}

void recompute_means(const Matrix& pts, const std::vector<std::size_t>& assignments,
                     Matrix& centroids, std::vector<std::size_t>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  Matrix sums(centroids.rows(), centroids.cols());
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    add_inplace(sums.row(assignments[i]), pts.row(i));
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (counts[c] == 0) continue;
    auto dst = centroids.row(c);
    auto src = sums.row(c);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
  }
}

// Moves, for each empty cluster, the point farthest from its current centroid
// (taken from a cluster with ≥2 members) into it. Never raises the objective.
std::size_t repair_empty(const Matrix& pts, Matrix& centroids,
                         std::vector<std::size_t>& assignments,
                         std::vector<std::size_t>& counts) {
  std::size_t repairs = 0;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = pts.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      if (counts[assignments[i]] < 2) continue;
      const double d = squared_distance(pts.row(i), centroids.row(assignments[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == pts.rows()) break;  // unreachable while m ≤ p
    --counts[assignments[far]];
    assignments[far] = c;
    counts[c] = 1;
    auto src = pts.row(far);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    ++repairs;
  }
  return repairs;
}

// Single-point transfers (Hartigan): move x from cluster a to c whenever
// n_c/(n_c+1)·|x−μ_c|² < n_a/(n_a−1)·|x−μ_a|², which strictly lowers the SSE.
// Returns the number of moves; centroids stay equal to the cluster means.
std::size_t transfer_sweep(const Matrix& pts, Matrix& centroids,
                           std::vector<std::size_t>& assignments,
                           std::vector<std::size_t>& counts) {
  std::size_t moves = 0;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const std::size_t a = assignments[i];
    if (counts[a] < 2) continue;
    const auto x = pts.row(i);
    const double na = static_cast<double>(counts[a]);
    const double remove_gain = na / (na - 1.0) * squared_distance(x, centroids.row(a));
    std::size_t best = a;
    double best_cost = remove_gain;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      if (c == a) continue;
      const double nc = static_cast<double>(counts[c]);
      const double cost = nc / (nc + 1.0) * squared_distance(x, centroids.row(c));
      if (cost < best_cost * (1.0 - 1e-12)) {
        best_cost = cost;
        best = c;
      }
    }
    if (best == a) continue;
    // Incremental mean updates for both clusters.
    auto ma = centroids.row(a);
    auto mb = centroids.row(best);
    const double nb = static_cast<double>(counts[best]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      ma[j] = (ma[j] * na - x[j]) / (na - 1.0);
      mb[j] = (mb[j] * nb + x[j]) / (nb + 1.0);
    }
    --counts[a];
    ++counts[best];
    assignments[i] = best;
    ++moves;
  }
  return moves;
}

}  // namespace

double kmeans_objective(const Matrix& patches, const Matrix& centroids,
                        const std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < patches.rows(); ++i)
    total += squared_distance(patches.row(i), centroids.row(assignments[i]));
  return total;
}

KMeansResult kmeans(const Matrix& patches, const KMeansConfig& cfg) {
  const std::size_t p = patches.rows();
  if (p == 0 || patches.cols() == 0) throw std::invalid_argument("kmeans: empty patch matrix");
  if (cfg.m < 1) throw std::invalid_argument("kmeans: m must be >= 1");
  if (cfg.m > p) {
    throw std::invalid_argument("kmeans: m=" + std::to_string(cfg.m) + " exceeds patch count " +
                                std::to_string(p));
  }
  require_finite(patches, "kmeans input");

  SplitMix64 rng(cfg.seed);
  KMeansResult r;
  r.centroids = seed_plus_plus(patches, cfg.m, rng);
  r.assignments.assign(p, 0);
  std::vector<std::size_t> counts(cfg.m, 0);

  assign_all(patches, r.centroids, r.assignments);
  double objective = kmeans_objective(patches, r.centroids, r.assignments);
  r.objective_trace.push_back(objective);

  while (r.iterations < cfg.max_iters) {
    ++r.iterations;
    recompute_means(patches, r.assignments, r.centroids, counts);
    r.repairs += repair_empty(patches, r.centroids, r.assignments, counts);
    assign_all(patches, r.centroids, r.assignments);
    const double next = kmeans_objective(patches, r.centroids, r.assignments);
    r.objective_trace.push_back(next);
    const double decrease = objective - next;
    objective = next;
    if (decrease <= cfg.rel_tol * std::max(objective + decrease, 0.0)) break;
  }

  // Final assignment can still leave a cluster empty (e.g. duplicate points).
  recompute_means(patches, r.assignments, r.centroids, counts);
  r.repairs += repair_empty(patches, r.centroids, r.assignments, counts);
  recompute_means(patches, r.assignments, r.centroids, counts);
  auto record = [&] {
    r.objective = kmeans_objective(patches, r.centroids, r.assignments);
    if (r.objective < r.objective_trace.back()) r.objective_trace.push_back(r.objective);
  };
  record();

  if (cfg.transfer_refinement) {
    for (std::size_t sweep = 0; sweep < cfg.max_iters; ++sweep) {
      if (transfer_sweep(patches, r.centroids, r.assignments, counts) == 0) break;
      // Re-derive the means exactly so incremental drift never accumulates.
      recompute_means(patches, r.assignments, r.centroids, counts);
      ++r.transfer_sweeps;
      record();
    }
  }
  return r;
}

Hypergraph build_visual_hot(const Matrix& patches, const KMeansConfig& cfg,
                            KMeansResult* details) {
  KMeansResult r = kmeans(patches, cfg);
  Hypergraph h{patches.rows(), std::vector<Hyperedge>(cfg.m)};
  for (std::size_t i = 0; i < r.assignments.size(); ++i)
    h.edges[r.assignments[i]].members.push_back(static_cast<VertexId>(i));
  for (std::size_t c = 0; c < cfg.m; ++c) h.edges[c].label = "cluster " + std::to_string(c);
  if (details) *details = std::move(r);
  return h;
}

}  // namespace hotkit
