#include "vitalguard/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

namespace vitalguard::adm {
namespace {

double dist2(const Point2D& a, const Point2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double dist(const Point2D& a, const Point2D& b) { return std::sqrt(dist2(a, b)); }

/// Uniform-grid spatial index with cell size epsilon: a radius query only
/// touches the 3x3 block of cells around the query point.
class GridIndex {
 public:
  GridIndex(const std::vector<Point2D>& points, double epsilon)
      : points_(points), eps_(epsilon) {
    cells_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      cells_[key(points[i])].push_back(i);
  }

  /// Indices within the closed epsilon-ball around points[q], ascending.
  std::vector<std::size_t> neighbours(std::size_t q) const {
    const Point2D& p = points_[q];
    const double e2 = eps_ * eps_;
    std::vector<std::size_t> out;
    const long long cx = coord(p.x);
    const long long cy = coord(p.y);
    for (long long ix = cx - 1; ix <= cx + 1; ++ix) {
      for (long long iy = cy - 1; iy <= cy + 1; ++iy) {
        auto it = cells_.find(pack(ix, iy));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second)
          if (dist2(p, points_[j]) <= e2) out.push_back(j);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  long long coord(double v) const { return static_cast<long long>(std::floor(v / eps_)); }
  static std::uint64_t pack(long long ix, long long iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy));
  }
  std::uint64_t key(const Point2D& p) const { return pack(coord(p.x), coord(p.y)); }

  const std::vector<Point2D>& points_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<std::vector<std::size_t>> ClusterResult::groups() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != kNoise) out[static_cast<std::size_t>(assignment[i])].push_back(i);
  return out;
}

std::size_t ClusterResult::noise_count() const {
  std::size_t n = 0;
  for (int a : assignment)
    if (a == kNoise) ++n;
  return n;
}

ClusterResult dbscan(const std::vector<Point2D>& points, double epsilon,
                     std::size_t min_points) {
  if (!(epsilon > 0.0)) throw InvalidParam("dbscan: epsilon must be > 0");
  if (min_points == 0) throw InvalidParam("dbscan: min_points must be >= 1");
  if (points.empty()) throw TooFewPoints("dbscan: no points");

  const GridIndex index(points, epsilon);
  ClusterResult res;
  res.assignment.assign(points.size(), kNoise);
  std::vector<char> visited(points.size(), 0);

  int cluster = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    const std::vector<std::size_t> seed = index.neighbours(i);
    if (seed.size() < min_points) continue;  // stays noise unless reached later

    res.assignment[i] = cluster;
    std::deque<std::size_t> queue(seed.begin(), seed.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (res.assignment[q] == kNoise) res.assignment[q] = cluster;  // border point
      if (visited[q]) continue;
      visited[q] = 1;
      const std::vector<std::size_t> reach = index.neighbours(q);
      if (reach.size() >= min_points)
        queue.insert(queue.end(), reach.begin(), reach.end());
    }
    ++cluster;
  }
  res.n_clusters = cluster;
  return res;
}

ClusterResult kmeans(const std::vector<Point2D>& points, std::size_t k,
                     std::uint64_t seed, std::size_t max_iterations) {
  if (k == 0) throw InvalidParam("kmeans: k must be >= 1");
  if (points.size() < k)
    throw TooFewPoints("kmeans: need at least k points, got " +
                       std::to_string(points.size()));

  const std::size_t n = points.size();
  Rng rng(seed);

  // Farthest-point initialisation.
  std::vector<Point2D> centres;
  centres.reserve(k);
  centres.push_back(points[rng.below(n)]);
  std::vector<double> nearest(n, 0.0);
  while (centres.size() < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = dist2(points[i], centres[0]);
      for (std::size_t c = 1; c < centres.size(); ++c)
        nearest[i] = std::min(nearest[i], dist2(points[i], centres[c]));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    centres.push_back(points[far]);
  }

  std::vector<int> assign(n, 0);
  std::vector<int> prev(n, -1);
  for (std::size_t iter = 0; iter < max_iterations && assign != prev; ++iter) {
    prev = assign;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist2(points[i], centres[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = dist2(points[i], centres[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      assign[i] = best;
    }

    std::vector<Point2D> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(assign[i])].x += points[i].x;
      sums[static_cast<std::size_t>(assign[i])].y += points[i].y;
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centres[c] = {sums[c].x / static_cast<double>(counts[c]),
                      sums[c].y / static_cast<double>(counts[c])};
      } else {
        // Re-seed an empty cluster at the point farthest from its centre.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = dist2(points[i], centres[static_cast<std::size_t>(assign[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centres[c] = points[far];
      }
    }
  }

  // Compact away empty clusters so ids are contiguous.
  std::vector<std::size_t> counts(k, 0);
  for (int a : assign) ++counts[static_cast<std::size_t>(a)];
  std::vector<int> remap(k, -1);
  int next = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0) remap[c] = next++;

  ClusterResult res;
  res.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    res.assignment[i] = remap[static_cast<std::size_t>(assign[i])];
  res.n_clusters = next;
  return res;
}

ClusterMetrics clustering_metrics(const std::vector<Point2D>& points,
                                  const ClusterResult& result) {
  if (points.size() != result.assignment.size())
    throw InvalidParam("metrics: assignment size mismatch");

  const auto groups_all = result.groups();
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& g : groups_all)
    if (!g.empty()) groups.push_back(g);
  if (groups.size() < 2)
    throw TooFewClusters("metrics need at least two non-empty clusters");

  // Silhouette.
  double sil_sum = 0.0;
  std::size_t sil_n = 0;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (std::size_t i : groups[c]) {
      double a = 0.0;
      if (groups[c].size() > 1) {
        for (std::size_t j : groups[c])
          if (j != i) a += dist(points[i], points[j]);
        a /= static_cast<double>(groups[c].size() - 1);
      }
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < groups.size(); ++d) {
        if (d == c) continue;
        double m = 0.0;
        for (std::size_t j : groups[d]) m += dist(points[i], points[j]);
        b = std::min(b, m / static_cast<double>(groups[d].size()));
      }
      double s = 0.0;
      if (groups[c].size() > 1) {
        const double denom = std::max(a, b);
        s = denom > 0.0 ? (b - a) / denom : 0.0;
      }
      sil_sum += s;
      ++sil_n;
    }
  }

  // Davies-Bouldin.
  std::vector<Point2D> centroids(groups.size());
  std::vector<double> scatter(groups.size(), 0.0);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    Point2D acc{0.0, 0.0};
    for (std::size_t i : groups[c]) {
      acc.x += points[i].x;
      acc.y += points[i].y;
    }
    centroids[c] = {acc.x / static_cast<double>(groups[c].size()),
                    acc.y / static_cast<double>(groups[c].size())};
    for (std::size_t i : groups[c]) scatter[c] += dist(points[i], centroids[c]);
    scatter[c] /= static_cast<double>(groups[c].size());
  }
  double db = 0.0;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    double worst = 0.0;
    for (std::size_t d = 0; d < groups.size(); ++d) {
      if (d == c) continue;
      const double m = dist(centroids[c], centroids[d]);
      const double r = m > 0.0 ? (scatter[c] + scatter[d]) / m
                               : std::numeric_limits<double>::infinity();
      worst = std::max(worst, r);
    }
    db += worst;
  }
  db /= static_cast<double>(groups.size());

  // Dunn: min single-linkage separation over max cluster diameter.
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (std::size_t d = c + 1; d < groups.size(); ++d)
      for (std::size_t i : groups[c])
        for (std::size_t j : groups[d]) min_sep = std::min(min_sep, dist(points[i], points[j]));
  double max_diam = 0.0;
  for (const auto& g : groups)
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = a + 1; b < g.size(); ++b)
        max_diam = std::max(max_diam, dist(points[g[a]], points[g[b]]));

  ClusterMetrics m;
  m.silhouette = sil_n > 0 ? sil_sum / static_cast<double>(sil_n) : 0.0;
  m.davies_bouldin = db;
  m.dunn = max_diam > 0.0 ? min_sep / max_diam
                          : std::numeric_limits<double>::infinity();
  return m;
}

std::vector<double> epsilon_candidates(const std::vector<Point2D>& points,
                                       std::size_t k, std::size_t count) {
  if (points.size() < 2 || count == 0) return {};
  const std::size_t n = points.size();
  const std::size_t kk = std::max<std::size_t>(1, std::min(k, n - 1));

  std::vector<double> knn(n, 0.0);
  std::vector<double> row(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist(points[i], points[j]));
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kk - 1),
                     row.end());
    knn[i] = row[kk - 1];
  }
  std::sort(knn.begin(), knn.end());

  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double frac =
        count == 1 ? 0.5 : 0.05 + 0.90 * static_cast<double>(i) / static_cast<double>(count - 1);
    const auto idx = static_cast<std::size_t>(
        std::llround(frac * static_cast<double>(n - 1)));
    const double eps = knn[std::min(idx, n - 1)];
    if (eps > 0.0) out.push_back(eps);
  }
  // Always offer the full-coverage radius: just above the largest k-th
  // neighbour distance every point has k neighbours in range, so nothing is
  // noise and the sweep's noise cap is guaranteed to be reachable.
  const double max_eps = knn[n - 1] * (1.0 + 1e-9);
  if (max_eps > 0.0) out.push_back(max_eps);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace vitalguard::adm
