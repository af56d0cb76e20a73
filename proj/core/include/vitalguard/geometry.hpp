#pragma once

/// 2-D geometry for cluster boundaries: simple polygons, the segment-parity
/// membership test mirrored by the constraint encoder, concave/convex hulls,
/// and a containment-preserving polygon simplifier.

#include <cstddef>
#include <vector>

#include "vitalguard/common.hpp"

namespace vitalguard::adm {

/// Relative tolerance for "on the boundary" decisions, applied after
/// normalizing each axis by the polygon's extent.
inline constexpr double kGeomEpsilon = 1e-9;

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidPolygon : public Error {
 public:
  using Error::Error;
};

struct Point2D {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2D&) const = default;
};

/// Closed segment with endpoints ordered so that b.y >= a.y. The ordering is
/// what lets the parity test use one half-open rule (a.y < y <= b.y) for
/// every segment.
struct LineSegment {
  Point2D a;  // lower endpoint (a.y <= b.y)
  Point2D b;  // upper endpoint

  LineSegment() = default;
  LineSegment(Point2D p, Point2D q) {
    if (p.y <= q.y) {
      a = p;
      b = q;
    } else {
      a = q;
      b = p;
    }
  }

  bool horizontal() const { return a.y == b.y; }
};

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

/// Simple polygon stored as a vertex ring (first vertex not repeated).
struct Polygon {
  std::vector<Point2D> vertices;

  std::size_t size() const { return vertices.size(); }

  /// Edge i joins vertices[i] and vertices[(i+1) % n], endpoint-ordered.
  std::vector<LineSegment> segments() const;

  BoundingBox bbox() const;

  /// Throws InvalidPolygon unless the ring has >= 3 vertices, no repeated
  /// consecutive vertices, and no self-intersection (adjacent edges may share
  /// their common endpoint).
  void validate() const;

  /// Signed area (positive for counter-clockwise rings).
  double signed_area() const;
};

/// 2 * signed area of triangle (a, b, c); > 0 when c lies left of a->b.
double cross(const Point2D& a, const Point2D& b, const Point2D& c);

/// True if p lies strictly left of the infinite line through the segment,
/// oriented from the lower endpoint to the upper one. Horizontal segments
/// never satisfy the ray test that guards this predicate.
bool left_of(const Point2D& p, const LineSegment& s);

/// One parity term: the horizontal ray from p to -x crosses this segment.
/// Uses the half-open rule a.y < p.y <= b.y, so horizontal segments never
/// intersect and shared vertices are counted exactly once.
bool segment_crossed(const Point2D& p, const LineSegment& s);

/// Pure parity (odd number of crossings), no boundary tolerance. This is the
/// exact Boolean structure the constraint encoder reproduces symbolically.
bool point_in_polygon_parity(const Point2D& p, const Polygon& poly);

/// Distance from p to the polygon boundary after normalizing each axis by
/// max(1, bbox extent) -- the polygons pair up sensors with wildly different
/// units, so raw Euclidean distance would be meaningless.
double normalized_boundary_distance(const Point2D& p, const Polygon& poly);

/// Membership with an epsilon boundary band: parity test, except points
/// within eps (relative, see normalized_boundary_distance) of an edge count
/// as inside regardless of parity.
bool within_cluster(const Point2D& p, const Polygon& poly,
                    double eps = kGeomEpsilon);

/// True if segments pq and rs properly intersect or improperly overlap.
/// Shared endpoints do not count (adjacent polygon edges are fine).
bool segments_intersect(const Point2D& p, const Point2D& q, const Point2D& r,
                        const Point2D& s);

/// Andrew monotone chain. Throws DegenerateGeometry for < 3 distinct points
/// or an all-collinear input. Result is counter-clockwise.
Polygon convex_hull(const std::vector<Point2D>& points);

/// k-nearest-neighbour concave hull. Starts at k = max(3, k_start) and
/// escalates k until the walk closes into a simple polygon containing every
/// input point; falls back to the convex hull when k reaches the point
/// count. Throws DegenerateGeometry when no polygon exists (< 3 distinct
/// points or all points collinear).
Polygon concave_hull(const std::vector<Point2D>& points, int k_start = 3);

/// Removes vertices whose deletion can only grow the enclosed region
/// (reflex or collinear vertices), bounded by a maximum deviation of
/// rel_tol * max(1, bbox extent). The output region is a superset of the
/// input region, so every point inside the input stays inside.
Polygon simplify_polygon(const Polygon& poly, double rel_tol);

/// Axis-aligned box around the points, inflated by rel_pad * max(1, extent)
/// per axis (used for clusters too small or too flat to hull).
Polygon inflated_bounding_box(const std::vector<Point2D>& points, double rel_pad);

}  // namespace vitalguard::adm
