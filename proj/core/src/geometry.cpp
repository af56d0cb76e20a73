#include "vitalguard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vitalguard::adm {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMinScale = 1e-12;

struct AxisScale {
  double sx = 1.0;
  double sy = 1.0;
};

AxisScale polygon_scale(const Polygon& poly) {
  const BoundingBox bb = poly.bbox();
  return {std::max(bb.width(), kMinScale), std::max(bb.height(), kMinScale)};
}

double point_segment_distance(double px, double py, double ax, double ay,
                              double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  const double qx = ax + t * dx;
  const double qy = ay + t * dy;
  return std::hypot(px - qx, py - qy);
}

bool collinear_point_on_segment(const Point2D& a, const Point2D& b, const Point2D& c) {
  // Assumes cross(a, b, c) == 0; checks c within the bounding box of ab.
  return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

std::vector<Point2D> dedupe(const std::vector<Point2D>& points) {
  std::vector<Point2D> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](const Point2D& l, const Point2D& r) {
    return l.x != r.x ? l.x < r.x : l.y < r.y;
  });
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return sorted;
}

double heading(const Point2D& from, const Point2D& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

double normalize_angle(double radians) {
  while (radians < 0.0) radians += kTwoPi;
  while (radians >= kTwoPi) radians -= kTwoPi;
  return radians;
}

}  // namespace

double cross(const Point2D& a, const Point2D& b, const Point2D& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool left_of(const Point2D& p, const LineSegment& s) {
  return cross(s.a, s.b, p) > 0.0;
}

bool segment_crossed(const Point2D& p, const LineSegment& s) {
  if (!(s.a.y < p.y && p.y <= s.b.y)) return false;  // half-open: horizontals never hit
  return left_of(p, s);
}

std::vector<LineSegment> Polygon::segments() const {
  std::vector<LineSegment> out;
  out.reserve(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i)
    out.emplace_back(vertices[i], vertices[(i + 1) % vertices.size()]);
  return out;
}

BoundingBox Polygon::bbox() const {
  BoundingBox bb;
  if (vertices.empty()) return bb;
  bb.min_x = bb.max_x = vertices[0].x;
  bb.min_y = bb.max_y = vertices[0].y;
  for (const auto& v : vertices) {
    bb.min_x = std::min(bb.min_x, v.x);
    bb.max_x = std::max(bb.max_x, v.x);
    bb.min_y = std::min(bb.min_y, v.y);
    bb.max_y = std::max(bb.max_y, v.y);
  }
  return bb;
}

double Polygon::signed_area() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2D& p = vertices[i];
    const Point2D& q = vertices[(i + 1) % vertices.size()];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

void Polygon::validate() const {
  const std::size_t n = vertices.size();
  if (n < 3) throw InvalidPolygon("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i)
    if (vertices[i] == vertices[(i + 1) % n])
      throw InvalidPolygon("repeated consecutive vertex");
  for (std::size_t i = 0; i < n; ++i) {
    const Point2D& p = vertices[i];
    const Point2D& q = vertices[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2D& r = vertices[j];
      const Point2D& s = vertices[(j + 1) % n];
      if (segments_intersect(p, q, r, s))
        throw InvalidPolygon("self-intersecting polygon (edges " + std::to_string(i) +
                             " and " + std::to_string(j) + ")");
    }
  }
  if (signed_area() == 0.0) throw InvalidPolygon("polygon has zero area");
}

bool point_in_polygon_parity(const Point2D& p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const LineSegment s(poly.vertices[i], poly.vertices[(i + 1) % n]);
    if (segment_crossed(p, s)) inside = !inside;
  }
  return inside;
}

double normalized_boundary_distance(const Point2D& p, const Polygon& poly) {
  const AxisScale sc = polygon_scale(poly);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2D& a = poly.vertices[i];
    const Point2D& b = poly.vertices[(i + 1) % n];
    best = std::min(best, point_segment_distance(p.x / sc.sx, p.y / sc.sy, a.x / sc.sx,
                                                 a.y / sc.sy, b.x / sc.sx, b.y / sc.sy));
  }
  return best;
}

bool within_cluster(const Point2D& p, const Polygon& poly, double eps) {
  if (point_in_polygon_parity(p, poly)) return true;
  return normalized_boundary_distance(p, poly) <= eps;
}

bool segments_intersect(const Point2D& p, const Point2D& q, const Point2D& r,
                        const Point2D& s) {
  const double d1 = cross(r, s, p);
  const double d2 = cross(r, s, q);
  const double d3 = cross(p, q, r);
  const double d4 = cross(p, q, s);

  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;

  const bool pq_shares_r = (p == r || q == r);
  const bool pq_shares_s = (p == s || q == s);

  // Collinear overlap: more than a single shared endpoint in common.
  if (d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0) {
    int contacts = 0;
    if (collinear_point_on_segment(r, s, p)) ++contacts;
    if (collinear_point_on_segment(r, s, q)) ++contacts;
    if (collinear_point_on_segment(p, q, r)) ++contacts;
    if (collinear_point_on_segment(p, q, s)) ++contacts;
    if (contacts == 0) return false;
    // Exactly one shared endpoint and nothing else on either segment is a
    // legal polygon joint; anything more is an overlap.
    const int shared = (pq_shares_r ? 1 : 0) + (pq_shares_s ? 1 : 0);
    return !(shared == 1 && contacts == 2);
  }

  // T-junction: an endpoint of one segment lies strictly inside the other.
  if (d1 == 0 && collinear_point_on_segment(r, s, p) && p != r && p != s) return true;
  if (d2 == 0 && collinear_point_on_segment(r, s, q) && q != r && q != s) return true;
  if (d3 == 0 && collinear_point_on_segment(p, q, r) && r != p && r != q) return true;
  if (d4 == 0 && collinear_point_on_segment(p, q, s) && s != p && s != q) return true;

  return false;
}

Polygon convex_hull(const std::vector<Point2D>& points) {
  std::vector<Point2D> pts = dedupe(points);
  if (pts.size() < 3)
    throw DegenerateGeometry("convex hull needs at least 3 distinct points");

  const std::size_t n = pts.size();
  std::vector<Point2D> hull(2 * n);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (m >= 2 && cross(hull[m - 2], hull[m - 1], pts[i]) <= 0) --m;
    hull[m++] = pts[i];
  }
  const std::size_t lower = m + 1;
  for (std::size_t i = n - 1; i-- > 0;) {  // upper chain
    while (m >= lower && cross(hull[m - 2], hull[m - 1], pts[i]) <= 0) --m;
    hull[m++] = pts[i];
  }
  hull.resize(m - 1);  // last point repeats the first
  if (hull.size() < 3)
    throw DegenerateGeometry("points are collinear; no polygon exists");
  Polygon poly{hull};
  return poly;
}

namespace {

/// One clockwise boundary walk with a fixed neighbourhood size k.
/// Returns an empty polygon when the walk fails to close cleanly.
Polygon concave_walk(const std::vector<Point2D>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].y < pts[first].y ||
        (pts[i].y == pts[first].y && pts[i].x < pts[first].x))
      first = i;
  }

  std::vector<char> used(n, 0);
  used[first] = 1;
  std::vector<Point2D> hull = {pts[first]};
  std::size_t current = first;
  double prev_angle = 0.0;  // virtual incoming edge points along +x

  struct Candidate {
    std::size_t index;
    double dist2;
    double turn;
  };

  const std::size_t max_steps = 4 * n + 16;
  for (std::size_t step = 0; step < max_steps; ++step) {
    // The start point becomes eligible again once a closed ring is possible.
    if (hull.size() >= 3) used[first] = 0;

    std::vector<Candidate> cand;
    cand.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] || i == current) continue;
      const double dx = pts[i].x - pts[current].x;
      const double dy = pts[i].y - pts[current].y;
      cand.push_back({i, dx * dx + dy * dy, 0.0});
    }
    if (cand.empty()) return {};
    std::sort(cand.begin(), cand.end(), [](const Candidate& l, const Candidate& r) {
      return l.dist2 != r.dist2 ? l.dist2 < r.dist2 : l.index < r.index;
    });
    if (cand.size() > k) cand.resize(k);

    // Largest right-hand turn first (descending clockwise angle from the
    // direction pointing back along the previous edge).
    for (auto& c : cand)
      c.turn = normalize_angle(prev_angle - heading(pts[current], pts[c.index]));
    std::sort(cand.begin(), cand.end(), [](const Candidate& l, const Candidate& r) {
      if (l.turn != r.turn) return l.turn > r.turn;
      return l.dist2 != r.dist2 ? l.dist2 < r.dist2 : l.index < r.index;
    });

    std::size_t chosen = n;
    for (const auto& c : cand) {
      const Point2D& target = pts[c.index];
      bool blocked = false;
      // The freshest edge shares `current`; shared endpoints are already
      // tolerated by segments_intersect, so test every hull edge.
      const std::size_t edges = hull.size() - 1;
      for (std::size_t e = 0; e < edges && !blocked; ++e)
        blocked = segments_intersect(hull[e], hull[e + 1], pts[current], target);
      if (!blocked) {
        chosen = c.index;
        break;
      }
    }
    if (chosen == n) return {};

    if (chosen == first && hull.size() >= 3) {
      Polygon poly{hull};
      return poly;  // closing edge validated above
    }

    hull.push_back(pts[chosen]);
    used[chosen] = 1;
    prev_angle = heading(pts[chosen], pts[current]);
    current = chosen;
  }
  return {};
}

bool hull_accepted(const Polygon& poly, const std::vector<Point2D>& pts) {
  if (poly.vertices.size() < 3) return false;
  try {
    poly.validate();
  } catch (const InvalidPolygon&) {
    return false;
  }
  for (const auto& p : pts)
    if (!within_cluster(p, poly, kGeomEpsilon)) return false;
  return true;
}

}  // namespace

Polygon concave_hull(const std::vector<Point2D>& points, int k_start) {
  const std::vector<Point2D> pts = dedupe(points);
  if (pts.size() < 3)
    throw DegenerateGeometry("concave hull needs at least 3 distinct points");

  bool collinear = true;
  for (std::size_t i = 2; i < pts.size() && collinear; ++i)
    collinear = cross(pts[0], pts[1], pts[i]) == 0.0;
  if (collinear) throw DegenerateGeometry("points are collinear; no polygon exists");

  for (std::size_t k = std::max<std::size_t>(3, static_cast<std::size_t>(k_start));
       k < pts.size(); ++k) {
    Polygon poly = concave_walk(pts, k);
    if (hull_accepted(poly, pts)) {
      if (poly.signed_area() < 0.0)
        std::reverse(poly.vertices.begin(), poly.vertices.end());
      return poly;
    }
  }
  return convex_hull(pts);
}

Polygon simplify_polygon(const Polygon& poly, double rel_tol) {
  poly.validate();
  if (rel_tol < 0.0) throw Error("simplify_polygon: tolerance must be >= 0");
  const AxisScale sc = polygon_scale(poly);
  const double orient = poly.signed_area() > 0.0 ? 1.0 : -1.0;

  std::vector<Point2D> ring = poly.vertices;
  bool changed = true;
  while (changed && ring.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < ring.size() && ring.size() > 3; ++i) {
      const std::size_t n = ring.size();
      const Point2D& u = ring[(i + n - 1) % n];
      const Point2D& v = ring[i];
      const Point2D& w = ring[(i + 1) % n];

      const double turn = cross(u, v, w) * orient;
      // Convex corners shape the hull; removing one would shrink the region
      // and could expel covered points, so only flat/reflex vertices go.
      if (turn > 0.0) continue;

      const double deviation = point_segment_distance(v.x / sc.sx, v.y / sc.sy,
                                                      u.x / sc.sx, u.y / sc.sy,
                                                      w.x / sc.sx, w.y / sc.sy);
      if (deviation > rel_tol) continue;

      // The chord u-w must not collide with the rest of the ring.
      bool blocked = (u == w);
      for (std::size_t e = 0; e < n && !blocked; ++e) {
        const std::size_t e2 = (e + 1) % n;
        if (e == i || e2 == i) continue;  // edges being replaced
        blocked = segments_intersect(u, w, ring[e], ring[e2]);
      }
      if (blocked) continue;

      Point2D removed = ring[i];
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
      Polygon trial{ring};
      bool ok = ring.size() >= 3;
      if (ok) {
        try {
          trial.validate();
        } catch (const InvalidPolygon&) {
          ok = false;
        }
      }
      if (!ok) {
        ring.insert(ring.begin() + static_cast<std::ptrdiff_t>(i), removed);
        continue;
      }
      changed = true;
      --i;
    }
  }

  Polygon out{ring};
  return out;
}

Polygon inflated_bounding_box(const std::vector<Point2D>& points, double rel_pad) {
  if (points.empty()) throw DegenerateGeometry("bounding box of an empty point set");
  BoundingBox bb;
  bb.min_x = bb.max_x = points[0].x;
  bb.min_y = bb.max_y = points[0].y;
  for (const auto& p : points) {
    bb.min_x = std::min(bb.min_x, p.x);
    bb.max_x = std::max(bb.max_x, p.x);
    bb.min_y = std::min(bb.min_y, p.y);
    bb.max_y = std::max(bb.max_y, p.y);
  }
  const double pad_x =
      rel_pad * std::max({1.0, std::fabs(bb.min_x), std::fabs(bb.max_x)});
  const double pad_y =
      rel_pad * std::max({1.0, std::fabs(bb.min_y), std::fabs(bb.max_y)});
  Polygon poly;
  poly.vertices = {{bb.min_x - pad_x, bb.min_y - pad_y},
                   {bb.max_x + pad_x, bb.min_y - pad_y},
                   {bb.max_x + pad_x, bb.max_y + pad_y},
                   {bb.min_x - pad_x, bb.max_y + pad_y}};
  return poly;
}

}  // namespace vitalguard::adm
