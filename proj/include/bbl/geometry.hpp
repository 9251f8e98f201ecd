#pragma once

/**
 * @file geometry.hpp
 * @brief Exact-sign convex hull kernels on lattice points.
 *
 * Planar coordinates are integer cell indices. Heights are quantized to
 * 53-bit integers relative to the largest magnitude before any orientation
 * test, so every predicate is an exact __int128 determinant.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "bbl/grid_function.hpp"

namespace bbl::geometry {

using i128 = __int128;

struct Point2 {
  Index x = 0;
  Index y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
  friend bool operator<(const Point2& a, const Point2& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }
};

inline i128 cross(const Point2& o, const Point2& a, const Point2& b) {
  return static_cast<i128>(a.x - o.x) * (b.y - o.y) - static_cast<i128>(a.y - o.y) * (b.x - o.x);
}

/// Counter-clockwise hull without collinear vertices (Andrew's monotone chain).
/// Degenerate inputs yield one vertex (a point) or two (a segment).
inline std::vector<Point2> convex_hull_2d(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Boundary-inclusive membership in a hull returned by convex_hull_2d.
inline bool in_convex_polygon(const std::vector<Point2>& poly, const Point2& q) {
  if (poly.empty()) return false;
  if (poly.size() == 1) return poly[0] == q;
  if (poly.size() == 2) {
    if (cross(poly[0], poly[1], q) != 0) return false;
    return std::min(poly[0].x, poly[1].x) <= q.x && q.x <= std::max(poly[0].x, poly[1].x) &&
           std::min(poly[0].y, poly[1].y) <= q.y && q.y <= std::max(poly[0].y, poly[1].y);
  }
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (cross(poly[i], poly[(i + 1) % poly.size()], q) < 0) return false;
  }
  return true;
}

/// Maps heights to integers with a common scale so that orientation tests are exact.
class HeightQuantizer {
 public:
  explicit HeightQuantizer(const std::vector<double>& z) {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    scale_ = m > 0.0 ? std::ldexp(1.0, 52) / m : 1.0;
  }
  std::int64_t operator()(double z) const { return static_cast<std::int64_t>(std::llround(z * scale_)); }

 private:
  double scale_ = 1.0;
};

/// Indices (into xs) of the upper concave hull vertices, left to right.
/// xs must be strictly increasing.
inline std::vector<std::size_t> upper_hull_1d(const std::vector<Index>& xs, const std::vector<double>& zs) {
  const HeightQuantizer quant(zs);
  std::vector<std::int64_t> Z(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) Z[i] = quant(zs[i]);
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      const auto a = hull[hull.size() - 2];
      const auto b = hull[hull.size() - 1];
      // Drop b unless it lies strictly above the chord a -> i.
      const i128 turn = static_cast<i128>(xs[b] - xs[a]) * (Z[i] - Z[a]) -
                        static_cast<i128>(Z[b] - Z[a]) * (xs[i] - xs[a]);
      if (turn >= 0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  return hull;
}

struct LiftedPoint {
  Index x = 0;
  Index y = 0;
  std::int64_t z = 0;
};

/// Sign of det[b - a; c - a; d - a]; positive when d lies on the side of (b - a) x (c - a).
inline int orient3d(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c, const LiftedPoint& d) {
  const i128 bx = b.x - a.x, by = b.y - a.y, bz = static_cast<i128>(b.z) - a.z;
  const i128 cx = c.x - a.x, cy = c.y - a.y, cz = static_cast<i128>(c.z) - a.z;
  const i128 dx = d.x - a.x, dy = d.y - a.y, dz = static_cast<i128>(d.z) - a.z;
  // bz, cz, dz reach 2^53 and planar terms 2^21, so each product stays below 2^96.
  const i128 det = bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx);
  return det > 0 ? 1 : (det < 0 ? -1 : 0);
}

struct Triangle {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t c = 0;
};

/// Faces of the 3-D convex hull with outward orientation, or empty when all
/// points are coplanar. Incremental construction; points on a face plane are
/// treated as not visible.
inline std::vector<Triangle> convex_hull_3d(const std::vector<LiftedPoint>& pts) {
  const std::size_t n = pts.size();
  if (n < 4) return {};
  std::size_t i1 = n, i2 = n, i3 = n;
  for (std::size_t i = 1; i < n && i1 == n; ++i) {
    if (pts[i].x != pts[0].x || pts[i].y != pts[0].y || pts[i].z != pts[0].z) i1 = i;
  }
  if (i1 == n) return {};
  auto collinear = [&](std::size_t k) {
    const i128 ux = pts[i1].x - pts[0].x, uy = pts[i1].y - pts[0].y, uz = static_cast<i128>(pts[i1].z) - pts[0].z;
    const i128 vx = pts[k].x - pts[0].x, vy = pts[k].y - pts[0].y, vz = static_cast<i128>(pts[k].z) - pts[0].z;
    return uy * vz - uz * vy == 0 && uz * vx - ux * vz == 0 && ux * vy - uy * vx == 0;
  };
  for (std::size_t i = 1; i < n && i2 == n; ++i) {
    if (i != i1 && !collinear(i)) i2 = i;
  }
  if (i2 == n) return {};
  for (std::size_t i = 1; i < n && i3 == n; ++i) {
    if (i != i1 && i != i2 && orient3d(pts[0], pts[i1], pts[i2], pts[i]) != 0) i3 = i;
  }
  if (i3 == n) return {};

  struct Face {
    std::size_t a, b, c;
    bool alive;
  };
  std::vector<Face> faces;
  const std::size_t tet[4] = {0, i1, i2, i3};
  for (int skip = 0; skip < 4; ++skip) {
    std::size_t v[3];
    int m = 0;
    for (int j = 0; j < 4; ++j) {
      if (j != skip) v[m++] = tet[j];
    }
    if (orient3d(pts[v[0]], pts[v[1]], pts[v[2]], pts[tet[skip]]) > 0) std::swap(v[1], v[2]);
    faces.push_back({v[0], v[1], v[2], true});
  }

  auto key = [n](std::size_t u, std::size_t w) { return static_cast<std::uint64_t>(u) * n + w; };
  std::vector<std::size_t> visible;
  std::unordered_set<std::uint64_t> visible_edges;
  std::size_t dead = 0;
  for (std::size_t p = 1; p < n; ++p) {
    if (p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && orient3d(pts[faces[f].a], pts[faces[f].b], pts[faces[f].c], pts[p]) > 0) {
        visible.push_back(f);
      }
    }
    if (visible.empty()) continue;
    visible_edges.clear();
    for (auto f : visible) {
      visible_edges.insert(key(faces[f].a, faces[f].b));
      visible_edges.insert(key(faces[f].b, faces[f].c));
      visible_edges.insert(key(faces[f].c, faces[f].a));
    }
    std::vector<std::pair<std::size_t, std::size_t>> horizon;
    for (auto f : visible) {
      const std::size_t e[3][2] = {{faces[f].a, faces[f].b}, {faces[f].b, faces[f].c}, {faces[f].c, faces[f].a}};
      for (const auto& edge : e) {
        if (!visible_edges.count(key(edge[1], edge[0]))) horizon.emplace_back(edge[0], edge[1]);
      }
      faces[f].alive = false;
    }
    for (const auto& [u, w] : horizon) faces.push_back({u, w, p, true});
    dead += visible.size();
    if (2 * dead > faces.size()) {
      std::erase_if(faces, [](const Face& f) { return !f.alive; });
      dead = 0;
    }
  }
  std::vector<Triangle> out;
  for (const auto& f : faces) {
    if (f.alive) out.push_back({f.a, f.b, f.c});
  }
  return out;
}

/// z-component of (b - a) x (c - a) for the planar projection.
inline i128 planar_normal(const LiftedPoint& a, const LiftedPoint& b, const LiftedPoint& c) {
  return static_cast<i128>(b.x - a.x) * (c.y - a.y) - static_cast<i128>(b.y - a.y) * (c.x - a.x);
}

}  // namespace bbl::geometry
