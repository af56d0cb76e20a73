#pragma once

/// 2-D clustering used to learn per-label sensor-pair regions: density
/// clustering (DBSCAN), centroid clustering (k-means), and the internal
/// quality metrics used for hyper-parameter selection.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vitalguard/common.hpp"
#include "vitalguard/geometry.hpp"

namespace vitalguard::adm {

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class TooFewClusters : public Error {
 public:
  using Error::Error;
};

class InvalidParam : public Error {
 public:
  using Error::Error;
};

/// Cluster id per point; kNoise (-1) marks density outliers. Ids are
/// contiguous from 0 in order of cluster discovery, which makes the output a
/// pure function of the input order and parameters.
inline constexpr int kNoise = -1;

struct ClusterResult {
  std::vector<int> assignment;  // size == number of points
  int n_clusters = 0;

  std::vector<std::vector<std::size_t>> groups() const;
  std::size_t noise_count() const;
};

/// Density clustering. Neighbourhoods use closed balls (distance <= epsilon,
/// the query point itself included in the core-point count). Border points
/// join the first core point that reaches them (scan order), so the result
/// is deterministic for a fixed input order.
ClusterResult dbscan(const std::vector<Point2D>& points, double epsilon,
                     std::size_t min_points);

/// Lloyd iterations with deterministic farthest-point initialisation (first
/// centre = seeded uniform pick, then repeatedly the point farthest from its
/// nearest chosen centre; ties resolve to the lowest index). Runs until the
/// assignment is stable or max_iterations is hit. Requires k <= point count.
ClusterResult kmeans(const std::vector<Point2D>& points, std::size_t k,
                     std::uint64_t seed, std::size_t max_iterations = 500);

/// Internal quality metrics over a clustering (noise points are excluded).
/// Requires at least two non-empty clusters after noise removal.
struct ClusterMetrics {
  double silhouette = 0.0;      // mean silhouette coefficient, in [-1, 1]
  double davies_bouldin = 0.0;  // lower is better, >= 0
  double dunn = 0.0;            // higher is better, >= 0
};

ClusterMetrics clustering_metrics(const std::vector<Point2D>& points,
                                  const ClusterResult& result);

/// Epsilon candidates for the dbscan parameter sweep: evenly spaced
/// percentiles (5th..95th) of the k-th nearest-neighbour distance.
std::vector<double> epsilon_candidates(const std::vector<Point2D>& points,
                                       std::size_t k, std::size_t count);

}  // namespace vitalguard::adm
