#pragma once

/// The cluster atlas: for every (label, sensor-pair) combination, one or
/// more simple polygons enclosing the training points of that label
/// projected onto that pair. A measurement vector is "consistent" with a
/// label when every pair projection lands inside some polygon of its entry.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vitalguard/clustering.hpp"
#include "vitalguard/common.hpp"
#include "vitalguard/data.hpp"
#include "vitalguard/geometry.hpp"

namespace vitalguard::adm {

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

enum class Algorithm { kDbscan, kKmeans };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// Atlas key: label j and sensor pair (a, b) with a < b.
struct PairKey {
  int label = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  auto operator<=>(const PairKey&) const = default;
};

/// Clustering configuration actually used for one entry (after the sweep).
struct EntryParams {
  Algorithm algorithm = Algorithm::kDbscan;
  double epsilon = 0.0;       // dbscan only
  std::size_t min_points = 0;  // dbscan only
  std::size_t k = 0;           // kmeans only
};

struct AtlasEntry {
  std::vector<Polygon> polygons;
  /// True when clustering yielded nothing usable (every point was noise);
  /// such an entry is skipped -- vacuously consistent -- by consistent().
  bool degenerate = false;
  EntryParams params;
  std::size_t cluster_count = 0;
  std::size_t noise_count = 0;
  std::size_t point_count = 0;
  /// Clusters too small or too flat to hull, enclosed as padded boxes.
  std::size_t box_fallbacks = 0;
};

struct ClusterAtlas {
  std::size_t n_sensors = 0;
  std::size_t n_labels = 0;
  Algorithm algorithm = Algorithm::kDbscan;
  std::uint64_t seed = 0;
  std::map<PairKey, AtlasEntry> entries;

  const AtlasEntry& at(const PairKey& key) const;

  /// Throws Error unless every (label, a<b) key is present and every
  /// non-degenerate entry has at least one valid polygon.
  void validate() const;
};

struct AtlasParams {
  // dbscan sweep: epsilon candidates are percentiles of the min_points-th
  // nearest-neighbour distance; the smallest epsilon whose noise fraction
  // stays under noise_cap wins (ties prefer smaller min_points).
  std::vector<std::size_t> min_points_sweep = {3, 4, 5};
  std::size_t epsilon_candidates = 10;
  double noise_cap = 0.01;

  // kmeans sweep: k in [k_min, k_max] scored by mean silhouette (subsampled
  // above metric_sample points to keep the sweep linear-ish).
  std::size_t k_min = 2;
  std::size_t k_max = 8;
  std::size_t metric_sample = 1000;

  // Hull construction.
  int hull_k_start = 3;
  double simplify_tolerance = 0.01;  // relative to the pair's extent
  /// Simplified concave hulls still larger than this fall back to the convex
  /// hull of the cluster (a superset, so coverage never drops). Boundary
  /// complexity feeds straight into constraint size and solver time; 0
  /// disables the fallback.
  std::size_t convex_fallback_vertices = 40;
  std::size_t min_hull_points = 3;
  double box_pad = kGeomEpsilon;

  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Builds one entry per (label, sensor pair). Entries are independent, so
/// the build parallelises over keys without affecting the result.
ClusterAtlas build_atlas(const data::Dataset& train, Algorithm algorithm,
                         const AtlasParams& params = {});

/// True iff, for every non-degenerate pair entry of `label`, the projection
/// of `measurements` lies within (or on, up to eps) one of its polygons.
bool consistent(const std::vector<double>& measurements, int label,
                const ClusterAtlas& atlas, double eps = kGeomEpsilon);

struct CoverageStats {
  std::size_t records = 0;
  std::size_t consistent_records = 0;
  double fraction = 0.0;
  std::vector<double> per_label_fraction;
};

/// Fraction of records consistent with their own label.
CoverageStats coverage(const data::Dataset& dataset, const ClusterAtlas& atlas,
                       double eps = kGeomEpsilon);

/// Versioned JSON serialization (entry keys are "label/a/b").
void save_atlas(const ClusterAtlas& atlas, const std::string& path);
ClusterAtlas load_atlas(const std::string& path);

}  // namespace vitalguard::adm
