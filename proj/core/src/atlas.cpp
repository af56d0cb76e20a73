#include "vitalguard/atlas.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace vitalguard::adm {
namespace {

std::vector<Point2D> project(const data::Dataset& ds,
                             const std::vector<std::size_t>& rows, std::size_t a,
                             std::size_t b) {
  std::vector<Point2D> pts;
  pts.reserve(rows.size());
  for (std::size_t r : rows)
    pts.push_back({ds.records[r].measurements[a], ds.records[r].measurements[b]});
  return pts;
}

std::vector<Point2D> subsample(const std::vector<Point2D>& pts, std::size_t cap) {
  if (pts.size() <= cap || cap == 0) return pts;
  std::vector<Point2D> out;
  out.reserve(cap);
  const double stride = static_cast<double>(pts.size()) / static_cast<double>(cap);
  for (std::size_t i = 0; i < cap; ++i)
    out.push_back(pts[static_cast<std::size_t>(static_cast<double>(i) * stride)]);
  return out;
}

struct DbscanChoice {
  double epsilon = 0.0;
  std::size_t min_points = 0;
  ClusterResult result;
  double noise_fraction = 1.0;
};

DbscanChoice sweep_dbscan(const std::vector<Point2D>& pts, const AtlasParams& p) {
  DbscanChoice best;
  bool have_qualifying = false;
  DbscanChoice least_noise;
  bool have_any = false;

  for (std::size_t mp : p.min_points_sweep) {
    const std::vector<double> candidates =
        epsilon_candidates(pts, mp, p.epsilon_candidates);
    for (double eps : candidates) {
      ClusterResult r = dbscan(pts, eps, mp);
      if (r.n_clusters == 0) continue;
      const double noise =
          static_cast<double>(r.noise_count()) / static_cast<double>(pts.size());
      if (!have_any || noise < least_noise.noise_fraction ||
          (noise == least_noise.noise_fraction && eps < least_noise.epsilon)) {
        least_noise = {eps, mp, r, noise};
        have_any = true;
      }
      if (noise <= p.noise_cap) {
        if (!have_qualifying || eps < best.epsilon ||
            (eps == best.epsilon && mp < best.min_points)) {
          best = {eps, mp, std::move(r), noise};
          have_qualifying = true;
        }
      }
    }
  }
  if (have_qualifying) return best;
  if (have_any) return least_noise;
  // Pathological input (e.g. all points identical): one catch-all cluster.
  DbscanChoice all;
  all.epsilon = 0.0;
  all.min_points = 0;
  all.result.assignment.assign(pts.size(), 0);
  all.result.n_clusters = 1;
  all.noise_fraction = 0.0;
  return all;
}

struct KmeansChoice {
  std::size_t k = 0;
  ClusterResult result;
};

KmeansChoice sweep_kmeans(const std::vector<Point2D>& pts, const AtlasParams& p,
                          std::uint64_t seed) {
  const std::size_t lo = std::max<std::size_t>(2, p.k_min);
  const std::size_t hi = std::min(p.k_max, pts.size());
  KmeansChoice best;
  double best_score = -std::numeric_limits<double>::infinity();

  for (std::size_t k = lo; k <= hi; ++k) {
    ClusterResult r = kmeans(pts, k, seed);
    double score;
    if (r.n_clusters < 2) {
      score = -1.0;  // silhouette needs two clusters; worst possible score
    } else if (pts.size() > p.metric_sample) {
      const std::vector<Point2D> sample = subsample(pts, p.metric_sample);
      ClusterResult rs = kmeans(sample, k, seed);
      score = rs.n_clusters >= 2 ? clustering_metrics(sample, rs).silhouette : -1.0;
    } else {
      score = clustering_metrics(pts, r).silhouette;
    }
    if (score > best_score) {
      best_score = score;
      best = {k, std::move(r)};
    }
  }
  if (best.k == 0) {  // fewer than two points: single catch-all cluster
    best.k = 1;
    best.result.assignment.assign(pts.size(), 0);
    best.result.n_clusters = 1;
  }
  return best;
}

AtlasEntry build_entry(const std::vector<Point2D>& pts, Algorithm algorithm,
                       const AtlasParams& params, std::uint64_t key_seed) {
  AtlasEntry entry;
  entry.point_count = pts.size();
  entry.params.algorithm = algorithm;

  ClusterResult clusters;
  if (pts.empty()) {
    entry.degenerate = true;
    return entry;
  }
  if (algorithm == Algorithm::kDbscan) {
    DbscanChoice c = sweep_dbscan(pts, params);
    entry.params.epsilon = c.epsilon;
    entry.params.min_points = c.min_points;
    clusters = std::move(c.result);
  } else {
    KmeansChoice c = sweep_kmeans(pts, params, key_seed);
    entry.params.k = c.k;
    clusters = std::move(c.result);
  }
  entry.cluster_count = static_cast<std::size_t>(clusters.n_clusters);
  entry.noise_count = clusters.noise_count();

  for (const auto& group : clusters.groups()) {
    if (group.empty()) continue;
    std::vector<Point2D> members;
    members.reserve(group.size());
    for (std::size_t i : group) members.push_back(pts[i]);

    bool boxed = members.size() < params.min_hull_points;
    if (!boxed) {
      try {
        Polygon hull = concave_hull(members, params.hull_k_start);
        hull = simplify_polygon(hull, params.simplify_tolerance);
        // A very jagged boundary is disproportionately expensive downstream
        // (each edge becomes a parity term in the membership constraints);
        // past the budget, fall back to the convex hull, which contains the
        // concave one, so no member point is expelled.
        if (params.convex_fallback_vertices > 0 &&
            hull.size() > params.convex_fallback_vertices)
          hull = convex_hull(members);
        entry.polygons.push_back(std::move(hull));
      } catch (const DegenerateGeometry&) {
        boxed = true;  // too few distinct points or collinear
      }
    }
    if (boxed) {
      entry.polygons.push_back(inflated_bounding_box(members, params.box_pad));
      ++entry.box_fallbacks;
    }
  }
  entry.degenerate = entry.polygons.empty();
  return entry;
}

}  // namespace

std::string to_string(Algorithm a) {
  return a == Algorithm::kDbscan ? "dbscan" : "kmeans";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "dbscan") return Algorithm::kDbscan;
  if (s == "kmeans") return Algorithm::kKmeans;
  throw InvalidParam("unknown clustering algorithm: " + s);
}

const AtlasEntry& ClusterAtlas::at(const PairKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end())
    throw UnknownLabel("atlas has no entry for label " + std::to_string(key.label) +
                       ", pair (" + std::to_string(key.a) + ", " +
                       std::to_string(key.b) + ")");
  return it->second;
}

void ClusterAtlas::validate() const {
  if (n_sensors < 2) throw Error("atlas needs at least two sensors");
  if (n_labels < 2) throw Error("atlas needs at least two labels");
  for (std::size_t j = 0; j < n_labels; ++j) {
    for (std::size_t a = 0; a < n_sensors; ++a) {
      for (std::size_t b = a + 1; b < n_sensors; ++b) {
        const AtlasEntry& e = at({static_cast<int>(j), a, b});
        if (!e.degenerate && e.polygons.empty())
          throw Error("non-degenerate atlas entry without polygons");
        for (const Polygon& poly : e.polygons) poly.validate();
      }
    }
  }
}

ClusterAtlas build_atlas(const data::Dataset& train, Algorithm algorithm,
                         const AtlasParams& params) {
  train.validate();
  if (train.records.empty()) throw data::EmptyDataset("cannot build atlas: no records");
  if (train.schema.n_sensors() < 2)
    throw DimensionMismatch("atlas needs at least two sensors");

  ClusterAtlas atlas;
  atlas.n_sensors = train.schema.n_sensors();
  atlas.n_labels = train.schema.n_labels();
  atlas.algorithm = algorithm;
  atlas.seed = params.seed;

  std::vector<PairKey> keys;
  for (std::size_t j = 0; j < atlas.n_labels; ++j)
    for (std::size_t a = 0; a < atlas.n_sensors; ++a)
      for (std::size_t b = a + 1; b < atlas.n_sensors; ++b)
        keys.push_back({static_cast<int>(j), a, b});

  std::vector<std::vector<std::size_t>> rows_by_label(atlas.n_labels);
  for (std::size_t j = 0; j < atlas.n_labels; ++j)
    rows_by_label[j] = train.indices_of_label(static_cast<int>(j));

  const Rng root(params.seed);
  std::vector<AtlasEntry> results(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      const PairKey& key = keys[i];
      const std::vector<Point2D> pts =
          project(train, rows_by_label[static_cast<std::size_t>(key.label)], key.a,
                  key.b);
      results[i] = build_entry(pts, algorithm, params, root.child(i).state());
    }
  };

  std::size_t n_threads = params.threads;
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, keys.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < keys.size(); ++i)
    atlas.entries.emplace(keys[i], std::move(results[i]));
  atlas.validate();
  return atlas;
}

bool consistent(const std::vector<double>& measurements, int label,
                const ClusterAtlas& atlas, double eps) {
  if (label < 0 || static_cast<std::size_t>(label) >= atlas.n_labels)
    throw UnknownLabel("label " + std::to_string(label) + " not in atlas");
  if (measurements.size() != atlas.n_sensors)
    throw DimensionMismatch("expected " + std::to_string(atlas.n_sensors) +
                            " measurements, got " + std::to_string(measurements.size()));

  for (std::size_t a = 0; a < atlas.n_sensors; ++a) {
    for (std::size_t b = a + 1; b < atlas.n_sensors; ++b) {
      const AtlasEntry& entry = atlas.at({label, a, b});
      if (entry.degenerate) continue;  // vacuously consistent
      const Point2D p{measurements[a], measurements[b]};
      bool inside = false;
      for (const Polygon& poly : entry.polygons) {
        if (within_cluster(p, poly, eps)) {
          inside = true;
          break;
        }
      }
      if (!inside) return false;
    }
  }
  return true;
}

CoverageStats coverage(const data::Dataset& dataset, const ClusterAtlas& atlas,
                       double eps) {
  CoverageStats st;
  st.records = dataset.records.size();
  std::vector<std::size_t> label_total(atlas.n_labels, 0);
  std::vector<std::size_t> label_ok(atlas.n_labels, 0);
  for (const auto& rec : dataset.records) {
    const auto j = static_cast<std::size_t>(rec.label);
    ++label_total[j];
    if (consistent(rec.measurements, rec.label, atlas, eps)) {
      ++st.consistent_records;
      ++label_ok[j];
    }
  }
  st.fraction = st.records == 0
                    ? 0.0
                    : static_cast<double>(st.consistent_records) /
                          static_cast<double>(st.records);
  st.per_label_fraction.resize(atlas.n_labels, 0.0);
  for (std::size_t j = 0; j < atlas.n_labels; ++j)
    st.per_label_fraction[j] = label_total[j] == 0
                                   ? 0.0
                                   : static_cast<double>(label_ok[j]) /
                                         static_cast<double>(label_total[j]);
  return st;
}

}  // namespace vitalguard::adm
