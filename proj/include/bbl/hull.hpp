#pragma once

/**
 * @file hull.hpp
 * @brief p-concave hulls, p-planes, convex hulls of cell sets, the midpoint
 *        p-concavity test and the half-level tail ratio.
 *
 * The hull is built on the lifted cloud {(x, T(f(x)))} over positive cells,
 * where T(v) = v^p (p > 0), log v (p = 0) or -v^p (p < 0). In every case the
 * hull is T^{-1} of the concave majorant of the lifted heights, restricted to
 * the cells whose centers lie in the convex hull of supp f.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bbl/geometry.hpp"
#include "bbl/grid_function.hpp"
#include "bbl/means.hpp"

namespace bbl {

/// h_{y,d}(x) = (<x, y> + d)^{1/p}, with 0 (p > 0) or infinity (p < 0) where
/// <x, y> + d <= 0, and exp(<x, y> + d) at p = 0.
struct PPlane {
  double p = 1.0;
  std::vector<double> y;
  double d = 0.0;
};

inline double p_plane_eval(const PPlane& plane, std::span<const double> x) {
  if (x.size() != plane.y.size()) throw std::invalid_argument("point and plane dimensions differ");
  double s = plane.d;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * plane.y[i];
  if (plane.p == 0.0) return std::exp(s);
  if (s <= 0.0) return plane.p > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  if (plane.p == 1.0) return s;
  return std::pow(s, 1.0 / plane.p);
}

inline double p_plane_eval(const PPlane& plane, std::initializer_list<double> x) {
  return p_plane_eval(plane, std::span<const double>(x.begin(), x.size()));
}

namespace detail {

/// Order-preserving lift T and its inverse.
struct PLift {
  double p = 0.0;

  double forward(double v) const {
    if (p == 0.0) return std::log(v);
    return p > 0.0 ? std::pow(v, p) : -std::pow(v, p);
  }
  double inverse(double w) const {
    if (p == 0.0) return std::exp(w);
    if (p > 0.0) return w <= 0.0 ? 0.0 : std::pow(w, 1.0 / p);
    return w >= 0.0 ? std::numeric_limits<double>::infinity() : std::pow(-w, 1.0 / p);
  }
  /// Plane in lifted coordinates w = a + <b, x> as a PPlane in real coordinates.
  PPlane plane(const GridGeometry& geo, double a, std::vector<double> b_index) const {
    // Index k sits at real coordinate origin + (k + 1/2) h, so k = (x - origin)/h - 1/2.
    PPlane out;
    out.p = p;
    double d = a;
    for (std::size_t i = 0; i < b_index.size(); ++i) {
      const double slope = b_index[i] / geo.spacing();
      d -= slope * (geo.origin()[i] + 0.5 * geo.spacing());
      b_index[i] = slope;
    }
    const double sign = p < 0.0 ? -1.0 : 1.0;
    out.d = sign * d;
    for (double& v : b_index) v *= sign;
    out.y = std::move(b_index);
    return out;
  }
};

inline std::vector<std::size_t> positive_support(const GridFunction& f) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0.0) cells.push_back(i);
  }
  return cells;
}

/// Mask of cells whose centers lie in the convex hull of the given cell centers.
inline std::vector<std::uint8_t> convex_hull_mask(const GridGeometry& geo, const std::vector<std::size_t>& cells) {
  std::vector<std::uint8_t> mask(geo.size(), 0);
  if (cells.empty()) return mask;
  if (geo.dim() == 1) {
    const auto [lo, hi] = std::minmax_element(cells.begin(), cells.end());
    for (std::size_t k = *lo; k <= *hi; ++k) mask[k] = 1;
    return mask;
  }
  if (geo.dim() != 2) throw std::invalid_argument("convex hulls are supported in dimensions 1 and 2");
  std::vector<geometry::Point2> pts;
  pts.reserve(cells.size());
  for (auto c : cells) {
    const auto idx = geo.unflat(c);
    pts.push_back({idx[0], idx[1]});
  }
  const auto poly = geometry::convex_hull_2d(pts);
  Index x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
  for (const auto& q : poly) {
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  for (Index x = x0; x <= x1; ++x) {
    for (Index y = y0; y <= y1; ++y) {
      if (geometry::in_convex_polygon(poly, {x, y})) mask[geo.flat({x, y, 0})] = 1;
    }
  }
  return mask;
}

/// Concave majorant along a lattice line: positions t (strictly increasing) and heights w.
/// Returns the majorant at every integer t in [t_front, t_back] and the vertex list.
struct ChainEnvelope {
  std::vector<double> values;         ///< indexed by t - t_front
  std::vector<std::size_t> vertices;  ///< indices into the input arrays
};

inline ChainEnvelope chain_envelope(const std::vector<Index>& t, const std::vector<double>& w) {
  ChainEnvelope env;
  env.vertices = geometry::upper_hull_1d(t, w);
  env.values.assign(static_cast<std::size_t>(t.back() - t.front() + 1), 0.0);
  for (std::size_t s = 0; s + 1 < env.vertices.size(); ++s) {
    const auto a = env.vertices[s];
    const auto b = env.vertices[s + 1];
    const double span = static_cast<double>(t[b] - t[a]);
    for (Index k = t[a]; k <= t[b]; ++k) {
      const double frac = static_cast<double>(k - t[a]) / span;
      env.values[static_cast<std::size_t>(k - t.front())] = w[a] + frac * (w[b] - w[a]);
    }
  }
  if (env.vertices.size() == 1) env.values[0] = w[env.vertices[0]];
  return env;
}

}  // namespace detail

struct HullResult {
  GridFunction hull;           ///< co_p(f) on f's grid; zero outside co(supp f)
  double gap_mass = 0.0;       ///< integral of hull - f
  std::vector<PPlane> facets;  ///< supporting p-planes of the hull
};

/// co_p(f) for 1-D and 2-D grids.
inline HullResult p_concave_hull(const GridFunction& f, double p) {
  const auto& geo = f.geometry();
  if (f.dim() > 2) throw std::invalid_argument("p_concave_hull supports 1-D and 2-D grids");
  if (!(p > -1.0 / static_cast<double>(f.dim()))) throw std::invalid_argument("p must exceed -1/dim");
  const auto cells = detail::positive_support(f);
  if (cells.empty()) throw std::invalid_argument("p_concave_hull requires positive mass");
  const detail::PLift lift{p};

  std::vector<double> env(f.size(), 0.0);
  std::vector<std::uint8_t> inside(f.size(), 0);
  HullResult result;

  // Points on one lattice line (always the case in 1-D) reduce to a chain.
  geometry::Point2 base{}, dir{1, 0};
  bool on_line = true;
  if (f.dim() == 2) {
    const auto i0 = geo.unflat(cells.front());
    base = {i0[0], i0[1]};
    bool have_dir = false;
    for (auto c : cells) {
      const auto idx = geo.unflat(c);
      const geometry::Point2 q{idx[0], idx[1]};
      if (q == base) continue;
      if (!have_dir) {
        const Index g = std::gcd(q.x - base.x, q.y - base.y);
        dir = {(q.x - base.x) / g, (q.y - base.y) / g};
        have_dir = true;
      } else if (geometry::cross(base, {base.x + dir.x, base.y + dir.y}, q) != 0) {
        on_line = false;
        break;
      }
    }
  }

  if (on_line) {
    std::vector<std::pair<Index, std::size_t>> order;
    for (auto c : cells) {
      const auto idx = geo.unflat(c);
      Index t = idx[0];
      if (f.dim() == 2) t = dir.x != 0 ? (idx[0] - base.x) / dir.x : (idx[1] - base.y) / dir.y;
      order.emplace_back(t, c);
    }
    std::sort(order.begin(), order.end());
    std::vector<Index> ts;
    std::vector<double> ws;
    for (const auto& [t, c] : order) {
      ts.push_back(t);
      ws.push_back(lift.forward(f[c]));
    }
    const auto chain = detail::chain_envelope(ts, ws);
    for (Index t = ts.front(); t <= ts.back(); ++t) {
      CellShift idx{t, 0, 0};
      if (f.dim() == 2) idx = {base.x + t * dir.x, base.y + t * dir.y, 0};
      const auto k = geo.flat(idx);
      inside[k] = 1;
      env[k] = chain.values[static_cast<std::size_t>(t - ts.front())];
    }
    auto add_facet = [&](double a, double slope) {
      // w = a + slope * t with t the position along dir.
      std::vector<double> b(f.dim());
      if (f.dim() == 1) {
        b[0] = slope;
      } else {
        // Any linear form agreeing with slope * t on the line.
        const double n2 = static_cast<double>(dir.x * dir.x + dir.y * dir.y);
        b[0] = slope * static_cast<double>(dir.x) / n2;
        b[1] = slope * static_cast<double>(dir.y) / n2;
        a -= b[0] * static_cast<double>(base.x) + b[1] * static_cast<double>(base.y);
      }
      result.facets.push_back(lift.plane(geo, a, std::move(b)));
    };
    if (chain.vertices.size() == 1) add_facet(ws[chain.vertices[0]], 0.0);
    for (std::size_t s = 0; s + 1 < chain.vertices.size(); ++s) {
      const auto a = chain.vertices[s];
      const auto b = chain.vertices[s + 1];
      const double slope = (ws[b] - ws[a]) / static_cast<double>(ts[b] - ts[a]);
      add_facet(ws[a] - slope * static_cast<double>(ts[a]), slope);
    }
  } else {
    std::vector<double> ws;
    ws.reserve(cells.size());
    for (auto c : cells) ws.push_back(lift.forward(f[c]));
    const geometry::HeightQuantizer quant(ws);
    std::vector<geometry::LiftedPoint> pts;
    pts.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto idx = geo.unflat(cells[i]);
      pts.push_back({idx[0], idx[1], quant(ws[i])});
    }
    struct Plane {
      double a, bx, by;
    };
    auto fit = [&](std::size_t i, std::size_t j, std::size_t k) {
      // Solve w = a + bx x + by y through three lifted points (xy not collinear).
      const double x1 = static_cast<double>(pts[j].x - pts[i].x), y1 = static_cast<double>(pts[j].y - pts[i].y);
      const double x2 = static_cast<double>(pts[k].x - pts[i].x), y2 = static_cast<double>(pts[k].y - pts[i].y);
      const double w1 = ws[j] - ws[i], w2 = ws[k] - ws[i];
      const double det = x1 * y2 - x2 * y1;
      const double bx = (w1 * y2 - w2 * y1) / det;
      const double by = (x1 * w2 - x2 * w1) / det;
      return Plane{ws[i] - bx * static_cast<double>(pts[i].x) - by * static_cast<double>(pts[i].y), bx, by};
    };
    std::vector<Plane> planes;
    const auto faces = geometry::convex_hull_3d(pts);
    if (faces.empty()) {
      // Lifted points are coplanar: the hull is a single plane.
      std::size_t j = 1;
      while (pts[j].x == pts[0].x && pts[j].y == pts[0].y) ++j;
      std::size_t k = j + 1;
      const geometry::Point2 p0{pts[0].x, pts[0].y}, p1{pts[j].x, pts[j].y};
      while (geometry::cross(p0, p1, {pts[k].x, pts[k].y}) == 0) ++k;
      planes.push_back(fit(0, j, k));
    } else {
      for (const auto& t : faces) {
        if (geometry::planar_normal(pts[t.a], pts[t.b], pts[t.c]) > 0) planes.push_back(fit(t.a, t.b, t.c));
      }
    }
    const auto mask = detail::convex_hull_mask(geo, cells);
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!mask[k]) continue;
      const auto idx = geo.unflat(k);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& pl : planes) {
        best = std::min(best, pl.a + pl.bx * static_cast<double>(idx[0]) + pl.by * static_cast<double>(idx[1]));
      }
      inside[k] = 1;
      env[k] = best;
    }
    for (const auto& pl : planes) result.facets.push_back(lift.plane(geo, pl.a, {pl.bx, pl.by}));
  }

  std::vector<double> out(f.size(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!inside[k]) continue;
    double v = lift.inverse(env[k]);
    if (!std::isfinite(v)) v = f[k];
    out[k] = std::max(f[k], v);
  }
  result.hull = f.with_values(std::move(out));
  result.gap_mass = l1_distance(result.hull, f);
  return result;
}

/// Outcome of the midpoint p-concavity test.
struct PConcavityCheck {
  bool p_concave = true;
  double worst = 0.0;  ///< largest M(f(x), f(y)) - f((x + y)/2); 0 when none is positive
  CellShift x{};
  CellShift y{};
  CellShift mid{};
};

/// Checks f((x+y)/2) >= M_{1/2,p}(f(x), f(y)) - tol max f over every pair of
/// support cells whose midpoint is a cell.
inline PConcavityCheck is_p_concave(const GridFunction& f, double p, double tol = 1e-9) {
  const auto& geo = f.geometry();
  const auto cells = detail::positive_support(f);
  const double slack = tol * f.max_value();
  PConcavityCheck out;
  std::vector<CellShift> idx;
  idx.reserve(cells.size());
  for (auto c : cells) idx.push_back(geo.unflat(c));
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      CellShift m{0, 0, 0};
      bool on_grid = true;
      for (std::size_t d = 0; d < f.dim(); ++d) {
        const Index s = idx[a][d] + idx[b][d];
        if (s % 2 != 0) {
          on_grid = false;
          break;
        }
        m[d] = s / 2;
      }
      if (!on_grid) continue;
      const double fm = f.at(m);
      const double x = f[cells[a]];
      const double y = f[cells[b]];
      if (fm >= std::max(x, y)) continue;
      const double need = power_mean(0.5, p, x, y) - fm;
      if (need > out.worst) {
        out.worst = need;
        out.x = idx[a];
        out.y = idx[b];
        out.mid = m;
      }
    }
  }
  out.p_concave = !(out.worst > slack);
  return out;
}

/// Cells whose centers lie in the convex hull of A's cell centers.
inline LevelSet convex_hull_set(const LevelSet& A) {
  if (A.empty()) throw std::invalid_argument("convex hull of an empty set");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < A.mask().size(); ++i) {
    if (A.contains(i)) cells.push_back(i);
  }
  return LevelSet(A.geometry(), detail::convex_hull_mask(A.geometry(), cells), A.threshold());
}

/// (|co(A)| - |A|) / |A|.
inline double hull_deficit(const LevelSet& A) {
  const auto co = convex_hull_set(A);
  return (co.measure() - A.measure()) / A.measure();
}

/// Half-level tail ratio of a p-concave function and the lower bound that
/// p-concavity forces on it.
struct TailRatio {
  double ratio = 0.0;  ///< integral over {g >= max/2} divided by the integral of g
  double bound = 0.0;  ///< 1 / (1 + 2 C) with C = n int_1^inf phi(s) s^{n-1} ds
  bool p_concave = true;
  bool meets_bound() const { return ratio >= bound; }
};

/// Largest value at distance s (in units of the half-level radius) allowed by
/// p-concavity when the maximum is 1 and the half level is reached at s = 1.
inline double tail_profile(double p, double s) {
  if (p == 0.0) return std::exp2(-s);
  const double base = s * (std::exp2(-p) - 1.0) + 1.0;
  if (base <= 0.0) return 0.0;
  return std::pow(base, 1.0 / p);
}

/// C = n int_1^inf tail_profile(p, s) s^{n-1} ds.
inline double tail_constant(double p, int n) {
  if (!(p > -1.0 / n)) throw std::invalid_argument("tail constant requires p > -1/n");
  auto integrand = [&](double s) { return tail_profile(p, s) * std::pow(s, n - 1); };
  auto simpson = [&](auto&& fn, double a, double b, int m) {
    const double hstep = (b - a) / m;
    double acc = fn(a) + fn(b);
    for (int i = 1; i < m; ++i) acc += fn(a + i * hstep) * (i % 2 ? 4.0 : 2.0);
    return acc * hstep / 3.0;
  };
  double total = 0.0;
  if (p > 0.0) {
    // Profile vanishes beyond s = 1 / (1 - 2^{-p}).
    const double end = 1.0 / (1.0 - std::exp2(-p));
    total = simpson(integrand, 1.0, end, 20000);
  } else {
    // Log-scale nodes s = e^u; beyond the last node the profile is a pure power.
    const double u_max = 80.0;
    total = simpson([&](double u) { return integrand(std::exp(u)) * std::exp(u); }, 0.0, u_max, 400000);
    if (p < 0.0) {
      const double e = 1.0 / p + n;  // negative
      const double s_max = std::exp(u_max);
      total += std::pow(std::exp2(-p) - 1.0, 1.0 / p) * std::pow(s_max, e) / (-e);
    }
  }
  return n * total;
}

inline TailRatio tail_ratio(const GridFunction& g, double p) {
  const double top = g.max_value();
  if (!(top > 0.0)) throw std::invalid_argument("tail_ratio requires max g > 0");
  TailRatio out;
  double inside = 0.0;
  double all = 0.0;
  for (double v : g.values()) {
    all += v;
    if (v >= 0.5 * top) inside += v;
  }
  out.ratio = inside / all;
  out.bound = 1.0 / (1.0 + 2.0 * tail_constant(p, static_cast<int>(g.dim())));
  out.p_concave = is_p_concave(g, p).p_concave;
  return out;
}

}  // namespace bbl
