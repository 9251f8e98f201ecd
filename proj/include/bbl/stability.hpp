#pragma once

/**
 * @file stability.hpp
 * @brief Stability certificates for triples (f, g, h): best translation and
 *        symmetric-difference distance, the shaving optimizer and the
 *        p-concave witness, the 2-D cone equipartition and the dimension
 *        reduction by fiber projection.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bbl/grid_function.hpp"
#include "bbl/hull.hpp"
#include "bbl/means.hpp"
#include "bbl/supconv.hpp"

namespace bbl {

struct StabilityReport {
  double delta = 0.0;
  double mass_f = 0.0;
  double mass_g = 0.0;
  CellShift best_shift{0, 0, 0};
  double symdiff_distance = 0.0;  ///< integral of |f - g(. + v)| at the best v
  double linear_gap = 0.0;        ///< integral of |f - l|
  double main_distance = 0.0;     ///< integral of |f - l| + |g(. + v) - l|
  double ratio_sqrt = 0.0;        ///< symdiff_distance / (sqrt(delta) mass_f)
  double ratio_linear = 0.0;      ///< linear_gap / (delta mass_f)
  double ratio_main = 0.0;        ///< main_distance / (sqrt(delta) mass_f)
  GridFunction witness;           ///< l
  double shave_removed = 0.0;
  std::size_t hypothesis_violations = 0;
  bool masses_match = true;
  bool witness_vanished = false;  ///< shaving removed everything, so l = 0
  bool valid() const { return hypothesis_violations == 0 && masses_match; }
};

namespace detail {

/// distance / (scale mass); 0 when distance is 0, infinity when scale vanishes.
inline double safe_ratio(double distance, double scale, double mass) {
  if (distance == 0.0) return 0.0;
  if (!(scale > 0.0) || !(mass > 0.0)) return std::numeric_limits<double>::infinity();
  return distance / (scale * mass);
}

inline bool masses_close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

struct Run {
  Index lo, hi;
  double value;
};

/// Rows of positive runs along the last axis, in the coordinates of `frame`.
struct RunTable {
  Index row_lo = 0;
  std::vector<std::vector<Run>> rows;  ///< row r holds first-axis index row_lo + r (2-D)
  Index lo[2]{};
  Index hi[2]{};
  bool empty = true;
};

inline RunTable run_table(const GridFunction& f, const CellShift& offset) {
  RunTable t;
  const auto& geo = f.geometry();
  const bool two = f.dim() == 2;
  const Index nrows = two ? static_cast<Index>(geo.shape()[0]) : 1;
  const Index ncols = static_cast<Index>(geo.shape().back());
  const Index col_off = two ? offset[1] : offset[0];
  t.row_lo = two ? offset[0] : 0;
  t.rows.resize(static_cast<std::size_t>(nrows));
  for (Index r = 0; r < nrows; ++r) {
    auto& row = t.rows[static_cast<std::size_t>(r)];
    for (Index c = 0; c < ncols;) {
      const double v = f[static_cast<std::size_t>(r * ncols + c)];
      Index e = c + 1;
      while (e < ncols && f[static_cast<std::size_t>(r * ncols + e)] == v) ++e;
      if (v > 0.0) {
        row.push_back({c + col_off, e + col_off, v});
        const Index rr = r + t.row_lo;
        if (t.empty) {
          t.lo[0] = t.hi[0] = rr;
          t.lo[1] = c + col_off;
          t.hi[1] = e - 1 + col_off;
          t.empty = false;
        }
        t.lo[0] = std::min(t.lo[0], rr);
        t.hi[0] = std::max(t.hi[0], rr);
        t.lo[1] = std::min(t.lo[1], c + col_off);
        t.hi[1] = std::max(t.hi[1], e - 1 + col_off);
      }
      c = e;
    }
  }
  return t;
}

/// Sum of |a - b| lengths over two sorted run lists, b moved by -shift.
inline double row_l1(const std::vector<Run>& a, const std::vector<Run>* b, Index shift) {
  double s = 0.0;
  if (b == nullptr || b->empty()) {
    for (const auto& r : a) s += r.value * static_cast<double>(r.hi - r.lo);
    return s;
  }
  std::size_t i = 0, j = 0;
  Index x = std::numeric_limits<Index>::min();
  while (i < a.size() || j < b->size()) {
    const Index a_lo = i < a.size() ? a[i].lo : std::numeric_limits<Index>::max();
    const Index b_lo = j < b->size() ? (*b)[j].lo - shift : std::numeric_limits<Index>::max();
    const Index a_hi = i < a.size() ? a[i].hi : std::numeric_limits<Index>::max();
    const Index b_hi = j < b->size() ? (*b)[j].hi - shift : std::numeric_limits<Index>::max();
    x = std::max(x, std::min(a_lo, b_lo));
    const bool in_a = i < a.size() && a_lo <= x;
    const bool in_b = j < b->size() && b_lo <= x;
    Index end = std::numeric_limits<Index>::max();
    if (in_a) end = std::min(end, a_hi);
    if (in_b) end = std::min(end, b_hi);
    if (!in_a && i < a.size()) end = std::min(end, a_lo);
    if (!in_b && j < b->size()) end = std::min(end, b_lo);
    const double va = in_a ? a[i].value : 0.0;
    const double vb = in_b ? (*b)[j].value : 0.0;
    s += std::abs(va - vb) * static_cast<double>(end - x);
    x = end;
    if (in_a && a_hi == x) ++i;
    if (in_b && b_hi == x) ++j;
  }
  return s;
}

}  // namespace detail

/// Shifted distance table entry.
struct ShiftDistance {
  CellShift shift{0, 0, 0};
  double distance = 0.0;
};

/// Exhaustive search for v minimizing the integral of |f(x) - g(x + v h)|.
///
/// The window holds every v for which the supports can meet; outside it the
/// distance is the sum of the masses. Ties within 1e-12 (mass_f + mass_g) go to
/// the smallest |v|, then lexicographic order.
inline ShiftDistance best_translation(const GridFunction& f, const GridFunction& g,
                                      std::vector<ShiftDistance>* all = nullptr) {
  if (f.dim() > 2) throw std::invalid_argument("translation search supports 1-D and 2-D grids");
  const CellShift d = g.geometry().offset_in(f.geometry());
  const auto A = detail::run_table(f, CellShift{0, 0, 0});
  const auto B = detail::run_table(g, d);
  const double vol = f.cell_volume();
  const double mass = integral(f) + integral(g);
  ShiftDistance best;
  best.distance = mass;
  if (A.empty || B.empty) return best;
  const bool two = f.dim() == 2;
  const Index r_lo = two ? B.lo[0] - A.hi[0] : 0;
  const Index r_hi = two ? B.hi[0] - A.lo[0] : 0;
  const Index c_lo = B.lo[1] - A.hi[1];
  const Index c_hi = B.hi[1] - A.lo[1];
  const double tie = 1e-12 * mass;
  auto norm2 = [](const CellShift& v) { return v[0] * v[0] + v[1] * v[1]; };
  bool first = true;
  for (Index vr = r_lo; vr <= r_hi; ++vr) {
    for (Index vc = c_lo; vc <= c_hi; ++vc) {
      double s = 0.0;
      // Rows of f, and rows of g that have no partner in f.
      std::vector<std::uint8_t> used(B.rows.size(), 0);
      for (std::size_t r = 0; r < A.rows.size(); ++r) {
        const Index br = static_cast<Index>(r) + A.row_lo + vr - B.row_lo;
        const std::vector<detail::Run>* brow = nullptr;
        if (br >= 0 && br < static_cast<Index>(B.rows.size())) {
          brow = &B.rows[static_cast<std::size_t>(br)];
          used[static_cast<std::size_t>(br)] = 1;
        }
        s += detail::row_l1(A.rows[r], brow, vc);
      }
      for (std::size_t r = 0; r < B.rows.size(); ++r) {
        if (!used[r]) s += detail::row_l1(B.rows[r], nullptr, 0);
      }
      s *= vol;
      const CellShift v = two ? CellShift{vr, vc, 0} : CellShift{vc, 0, 0};
      if (all) all->push_back({v, s});
      bool take = first || s < best.distance - tie;
      if (!take && s <= best.distance + tie) {
        take = norm2(v) < norm2(best.shift) || (norm2(v) == norm2(best.shift) && v < best.shift);
      }
      if (take) best = {v, s};
      first = false;
    }
  }
  return best;
}

/// delta, best translation v, integral of |f - g(. + v)| and its ratio to sqrt(delta).
inline StabilityReport certify_symmetric_difference(const GridFunction& f, const GridFunction& g,
                                                    const GridFunction& h, const MeanParams& params) {
  StabilityReport rep;
  const DeficitReport def = deficit(f, g, h, params);
  if (!(def.mass_g > 0.0)) throw std::invalid_argument("g must have positive mass");
  rep.delta = def.delta;
  rep.mass_f = def.mass_f;
  rep.mass_g = def.mass_g;
  rep.masses_match = detail::masses_close(def.mass_f, def.mass_g);
  rep.hypothesis_violations = def.pointwise_violations;
  const auto best = best_translation(f, g);
  rep.best_shift = best.shift;
  rep.symdiff_distance = best.distance;
  rep.ratio_sqrt = detail::safe_ratio(rep.symdiff_distance, std::sqrt(std::max(0.0, rep.delta)), rep.mass_f);
  return rep;
}

// ---------------------------------------------------------------------------
// Shaving
// ---------------------------------------------------------------------------

struct ShaveOptions {
  std::size_t max_pair_anchors = 48;    ///< anchors for p-planes through pairs (1-D)
  std::size_t max_triple_anchors = 24;  ///< anchors for p-planes through triples (2-D)
  std::size_t max_steps = 1000;
};

struct ShaveResult {
  GridFunction shaved;     ///< f'
  double removed = 0.0;    ///< integral of f - f'
  double objective = 0.0;  ///< integral of (M*(f,f) - M*(f',f')) - (1 + c) removed
  std::size_t steps = 0;   ///< accepted moves
  bool vanished = false;   ///< f' = 0
};

namespace detail {

inline double self_sup_mass(const GridFunction& f, const MeanParams& params) {
  if (f.support_count() == 0) return 0.0;
  return integral(sup_convolution(f, f, params));
}

/// A candidate move f' -> min(f', cutter). Cutter values are produced on demand.
struct Cutter {
  enum class Kind { cap, plane, half_space } kind = Kind::cap;
  double level = 0.0;       ///< cap height
  CellShift anchor{};       ///< plane: lifted height w0 at this cell
  double w0 = 0.0;
  double slope[2]{};        ///< plane: lifted slope per index step
  int axis_a = 1;           ///< half space keeps cells with axis_a i_0 + axis_b i_1 (< or >=) offset
  int axis_b = 0;
  Index offset = 0;
  bool keep_below = true;
};

class ShavingDictionary {
 public:
  ShavingDictionary(const GridFunction& f, double p, const ShaveOptions& opt) : f_(f), lift_{p} {
    const auto& geo = f.geometry();
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (f[k] > 0.0) cells.push_back(k);
    }
    if (cells.empty()) return;

    std::vector<double> levels(f.values().begin(), f.values().end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double t : levels) {
      if (t > 0.0 && t < levels.back()) cutters_.push_back({Cutter::Kind::cap, t});
    }

    auto subsample = [&](std::size_t cap) {
      if (cells.size() <= cap) return cells;
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < cap; ++i) out.push_back(cells[i * (cells.size() - 1) / (cap - 1)]);
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    };

    Index lo[2] = {std::numeric_limits<Index>::max(), std::numeric_limits<Index>::max()};
    Index hi[2] = {std::numeric_limits<Index>::min(), std::numeric_limits<Index>::min()};
    for (auto k : cells) {
      const auto idx = geo.unflat(k);
      for (std::size_t d = 0; d < f.dim() && d < 2; ++d) {
        lo[d] = std::min(lo[d], idx[d]);
        hi[d] = std::max(hi[d], idx[d]);
      }
    }
    auto half_spaces = [&](int a, int b, Index from, Index to) {
      for (Index s = from; s <= to; ++s) {
        for (bool below : {true, false}) {
          Cutter c;
          c.kind = Cutter::Kind::half_space;
          c.axis_a = a;
          c.axis_b = b;
          c.offset = s;
          c.keep_below = below;
          cutters_.push_back(c);
        }
      }
    };

    if (f.dim() == 1) {
      const auto anchors = subsample(opt.max_pair_anchors);
      for (std::size_t a = 0; a < anchors.size(); ++a) {
        for (std::size_t b = a + 1; b < anchors.size(); ++b) {
          Cutter c;
          c.kind = Cutter::Kind::plane;
          c.anchor = {static_cast<Index>(anchors[a]), 0, 0};
          c.w0 = lift_.forward(f[anchors[a]]);
          c.slope[0] = (lift_.forward(f[anchors[b]]) - c.w0) / static_cast<double>(anchors[b] - anchors[a]);
          cutters_.push_back(c);
        }
      }
      // Cuts at boundaries next to positive cells.
      for (std::size_t b = 0; b <= f.size(); ++b) {
        const bool near = (b > 0 && f[b - 1] > 0.0) || (b < f.size() && f[b] > 0.0);
        if (near) half_spaces(1, 0, static_cast<Index>(b), static_cast<Index>(b));
      }
      return;
    }
    if (f.dim() != 2) throw std::invalid_argument("shaving supports 1-D and 2-D grids");
    const auto anchors = subsample(opt.max_triple_anchors);
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      for (std::size_t b = a + 1; b < anchors.size(); ++b) {
        for (std::size_t c3 = b + 1; c3 < anchors.size(); ++c3) {
          const auto ia = geo.unflat(anchors[a]), ib = geo.unflat(anchors[b]), ic = geo.unflat(anchors[c3]);
          const double x1 = static_cast<double>(ib[0] - ia[0]), y1 = static_cast<double>(ib[1] - ia[1]);
          const double x2 = static_cast<double>(ic[0] - ia[0]), y2 = static_cast<double>(ic[1] - ia[1]);
          const double det = x1 * y2 - x2 * y1;
          if (det == 0.0) continue;
          Cutter c;
          c.kind = Cutter::Kind::plane;
          c.anchor = ia;
          c.w0 = lift_.forward(f[anchors[a]]);
          const double w1 = lift_.forward(f[anchors[b]]) - c.w0;
          const double w2 = lift_.forward(f[anchors[c3]]) - c.w0;
          c.slope[0] = (w1 * y2 - w2 * y1) / det;
          c.slope[1] = (x1 * w2 - x2 * w1) / det;
          cutters_.push_back(c);
        }
      }
    }
    half_spaces(1, 0, lo[0], hi[0] + 1);
    half_spaces(0, 1, lo[1], hi[1] + 1);
    half_spaces(1, 1, lo[0] + lo[1], hi[0] + hi[1] + 1);
    half_spaces(1, -1, lo[0] - hi[1], hi[0] - lo[1] + 1);
  }

  std::size_t size() const { return cutters_.size(); }

  /// Writes min(cur, cutter) into out and returns the removed cell sum.
  double apply(std::size_t which, const std::vector<double>& cur, std::vector<double>& out) const {
    const auto& c = cutters_[which];
    const auto& geo = f_.geometry();
    double removed = 0.0;
    for (std::size_t k = 0; k < cur.size(); ++k) {
      out[k] = cur[k];
      if (cur[k] == 0.0) continue;
      double cut = std::numeric_limits<double>::infinity();
      switch (c.kind) {
        case Cutter::Kind::cap:
          cut = c.level;
          break;
        case Cutter::Kind::plane: {
          const auto idx = geo.unflat(k);
          double w = c.w0;
          for (std::size_t d = 0; d < f_.dim(); ++d) w += c.slope[d] * static_cast<double>(idx[d] - c.anchor[d]);
          cut = lift_.inverse(w);
          // Cuts that only graze f by rounding are ignored.
          if (cut >= f_[k] * (1.0 - 1e-12)) cut = std::numeric_limits<double>::infinity();
          break;
        }
        case Cutter::Kind::half_space: {
          const auto idx = geo.unflat(k);
          const Index key = c.axis_a * idx[0] + (f_.dim() == 2 ? c.axis_b * idx[1] : 0);
          if ((key < c.offset) != c.keep_below) cut = 0.0;
          break;
        }
      }
      if (cut < cur[k]) {
        out[k] = cut;
        removed += cur[k] - cut;
      }
    }
    return removed;
  }

 private:
  const GridFunction& f_;
  PLift lift_;
  std::vector<Cutter> cutters_;
};

}  // namespace detail

/// Greedy maximization of integral(M*(f,f) - M*(f',f')) - (1 + c) integral(f - f')
/// over moves f' -> min(f', cutter) from a finite dictionary of p-planes through
/// lifted support points, level caps and half-space truncations.
inline ShaveResult shave(const GridFunction& f, const MeanParams& params, double c,
                         const ShaveOptions& opt = {}) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("shaving constant c must lie in (0, 1)");
  const double mass = integral(f);
  if (!(mass > 0.0)) throw std::invalid_argument("shave requires positive mass");
  const double vol = f.cell_volume();
  const double base_sup = detail::self_sup_mass(f, params);
  const double eps = 1e-14 * mass;

  ShaveResult res;
  std::vector<double> cur(f.values().begin(), f.values().end());
  double cur_sup = base_sup;
  double cur_mass = mass;
  if (base_sup - mass > eps) {
    const detail::ShavingDictionary dict(f, params.p(), opt);
    std::vector<double> trial(cur.size());
    std::vector<double> best_values(cur.size());
    while (res.steps < opt.max_steps) {
      // A move removing mass r gains at most (cur_sup - cur_mass) - c r.
      const double slack = cur_sup - cur_mass;
      double best_gain = eps;
      double best_sup = 0.0;
      bool found = false;
      for (std::size_t ci = 0; ci < dict.size(); ++ci) {
        const double removed = dict.apply(ci, cur, trial) * vol;
        if (!(removed > 0.0) || c * removed >= slack - eps) continue;
        const double sup = detail::self_sup_mass(f.with_values(trial), params);
        const double gain = (cur_sup - sup) - (1.0 + c) * removed;
        if (gain > best_gain) {
          best_gain = gain;
          best_sup = sup;
          best_values = trial;
          found = true;
        }
      }
      if (!found) break;
      cur.swap(best_values);
      cur_sup = best_sup;
      cur_mass = 0.0;
      for (double v : cur) cur_mass += v;
      cur_mass *= vol;
      ++res.steps;
    }
  }
  double removed = 0.0;
  for (std::size_t k = 0; k < cur.size(); ++k) removed += f[k] - cur[k];
  res.removed = removed * vol;
  res.objective = (base_sup - cur_sup) - (1.0 + c) * res.removed;
  res.vanished = std::all_of(cur.begin(), cur.end(), [](double v) { return v == 0.0; });
  res.shaved = f.with_values(std::move(cur));
  return res;
}

/// Default shaving constant 0.1 lambda.
inline double default_shave_constant(const MeanParams& params) { return 0.1 * params.lambda(); }

/// l = co_p(shave(f)) and the gap integral of |f - l|. Pass h = nullopt for h := M*(f,f).
inline StabilityReport certify_linear(const GridFunction& f, const std::optional<GridFunction>& h,
                                      const MeanParams& params, double c) {
  StabilityReport rep;
  rep.mass_f = integral(f);
  if (!(rep.mass_f > 0.0)) throw std::invalid_argument("certify_linear requires positive mass");
  rep.mass_g = rep.mass_f;
  const GridFunction hh = h ? *h : sup_convolution(f, f, params);
  const DeficitReport def = deficit(f, f, hh, params);
  rep.delta = def.delta;
  rep.hypothesis_violations = def.pointwise_violations;
  const ShaveResult sh = shave(f, params, c);
  rep.shave_removed = sh.removed;
  rep.witness_vanished = sh.vanished;
  rep.witness = sh.vanished ? GridFunction::zeros(f.geometry()) : p_concave_hull(sh.shaved, params.p()).hull;
  rep.linear_gap = l1_distance(f, rep.witness);
  rep.ratio_linear = detail::safe_ratio(rep.linear_gap, std::max(0.0, rep.delta), rep.mass_f);
  return rep;
}

/// Symmetric-difference certificate, then the linear certificate on
/// k = min(f, g(. + v)) and the distance of both f and g(. + v) to its witness.
inline StabilityReport certify_main(const GridFunction& f, const GridFunction& g, const GridFunction& h,
                                    const MeanParams& params, double c) {
  StabilityReport rep = certify_symmetric_difference(f, g, h, params);
  CellShift back{0, 0, 0};
  for (std::size_t a = 0; a < f.dim(); ++a) back[a] = -rep.best_shift[a];
  const GridFunction g_shift = translate(g, back);
  const auto [fa, ga] = align(f, g_shift);
  const GridFunction k = pointwise_min(fa, ga);
  if (k.support_count() == 0) {
    rep.witness = GridFunction::zeros(fa.geometry());
    rep.witness_vanished = true;
  } else {
    const StabilityReport lin = certify_linear(k, std::nullopt, params, c);
    rep.witness = lin.witness;
    rep.witness_vanished = lin.witness_vanished;
    rep.shave_removed = lin.shave_removed;
  }
  rep.linear_gap = l1_distance(fa, rep.witness);
  rep.main_distance = rep.linear_gap + l1_distance(ga, rep.witness);
  rep.ratio_linear = detail::safe_ratio(rep.linear_gap, std::max(0.0, rep.delta), rep.mass_f);
  rep.ratio_main = detail::safe_ratio(rep.main_distance, std::sqrt(std::max(0.0, rep.delta)), rep.mass_f);
  return rep;
}

// ---------------------------------------------------------------------------
// Cone equipartition in the plane
// ---------------------------------------------------------------------------

/// Three rays from an apex cutting the plane into three convex sectors.
/// Sector i runs counter-clockwise from ray i to ray i + 1 (mod 3).
struct Cone2D {
  std::array<double, 3> ray_angles{};  ///< radians, strictly increasing within [theta_0, theta_0 + 2 pi)

  Cone2D() : Cone2D(regular()) {}
  explicit Cone2D(std::array<double, 3> angles) : ray_angles(angles) {
    for (int i = 0; i < 3; ++i) {
      const double span = opening(i);
      if (!(span > 0.0 && span < std::numbers::pi)) {
        throw std::invalid_argument("each sector must have an opening in (0, pi)");
      }
    }
  }

  double opening(int i) const {
    const double a = ray_angles[static_cast<std::size_t>(i)];
    const double b = ray_angles[static_cast<std::size_t>((i + 1) % 3)];
    double s = b - a;
    while (s <= 0.0) s += 2.0 * std::numbers::pi;
    return s;
  }

  /// Unit vector along the bisector of sector i.
  std::array<double, 2> axis(int i) const {
    const double mid = ray_angles[static_cast<std::size_t>(i)] + 0.5 * opening(i);
    return {std::cos(mid), std::sin(mid)};
  }

  /// 120 degree sectors around the directions 0, 120 and 240 degrees.
  static Cone2D regular() {
    const double pi = std::numbers::pi;
    return Cone2D(std::array<double, 3>{-pi / 3.0, pi / 3.0, pi});
  }

  /// K_1 = {x < 0, |y| <= |x|}, K_2 = {y >= max(0, -x)}, K_3 = {y <= min(0, x)}.
  /// Sector 0 is K_1, sector 1 is K_3 and sector 2 is K_2.
  static Cone2D quadrant() {
    const double pi = std::numbers::pi;
    return Cone2D(std::array<double, 3>{3.0 * pi / 4.0, 5.0 * pi / 4.0, 2.0 * pi});
  }
};

namespace detail {

using Poly = std::vector<std::array<double, 2>>;

/// Keeps the part of `poly` with n . (x - a) >= 0.
inline Poly clip(const Poly& poly, std::array<double, 2> n, std::array<double, 2> a) {
  Poly out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& P = poly[i];
    const auto& Q = poly[(i + 1) % m];
    const double sp = n[0] * (P[0] - a[0]) + n[1] * (P[1] - a[1]);
    const double sq = n[0] * (Q[0] - a[0]) + n[1] * (Q[1] - a[1]);
    if (sp >= 0.0) out.push_back(P);
    if ((sp >= 0.0) != (sq >= 0.0)) {
      const double t = sp / (sp - sq);
      out.push_back({P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])});
    }
  }
  return out;
}

inline double area(const Poly& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& P = poly[i];
    const auto& Q = poly[(i + 1) % poly.size()];
    s += P[0] * Q[1] - P[1] * Q[0];
  }
  return 0.5 * std::abs(s);
}

}  // namespace detail

/// Integrals of f over apex + sector_i, i = 0, 1, 2 (cells split exactly by area).
inline std::array<double, 3> sector_masses(const GridFunction& f, const Cone2D& cone, std::array<double, 2> apex) {
  if (f.dim() != 2) throw std::invalid_argument("sector masses require a 2-D grid");
  const auto& geo = f.geometry();
  const double h = geo.spacing();
  std::array<std::array<double, 2>, 3> in_left{};  // inward normal of the half-plane left of ray i
  std::array<std::array<double, 2>, 3> in_right{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = std::cos(cone.ray_angles[i]);
    const double s = std::sin(cone.ray_angles[i]);
    in_left[i] = {-s, c};
    in_right[i] = {s, -c};
  }
  std::array<double, 3> m{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] <= 0.0) continue;
    const auto idx = geo.unflat(k);
    const double x0 = geo.origin()[0] + static_cast<double>(idx[0]) * h;
    const double y0 = geo.origin()[1] + static_cast<double>(idx[1]) * h;
    const detail::Poly sq{{x0, y0}, {x0 + h, y0}, {x0 + h, y0 + h}, {x0, y0 + h}};
    double used = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const auto part = detail::clip(detail::clip(sq, in_left[i], apex), in_right[(i + 1) % 3], apex);
      const double a = part.size() >= 3 ? detail::area(part) : 0.0;
      m[i] += f[k] * a;
      used += a;
    }
    m[2] += f[k] * std::max(0.0, h * h - used);
  }
  return m;
}

struct EquipartitionResult {
  std::array<double, 2> apex{0.0, 0.0};
  std::array<double, 3> masses{};
  double residual = 0.0;  ///< max_i |mass_i - mass/3|
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Apex a with equal mass of f in a + sector_i for every i.
///
/// The apex moves along the axis of sector 0 (whose mass is monotone in that
/// direction) in an inner bisection, and across it in an outer bisection on
/// the sign of mass_1 - mass_2.
inline EquipartitionResult cone_equipartition_2d(const GridFunction& f, const Cone2D& cone = Cone2D::regular(),
                                                 double rel_tol = 1e-6, int max_iterations = 200) {
  if (f.dim() != 2) throw std::invalid_argument("cone equipartition requires a 2-D grid");
  const double mass = integral(f);
  if (!(mass > 0.0)) throw std::invalid_argument("cone equipartition requires positive mass");
  const auto& geo = f.geometry();
  double lo[2] = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  double hi[2] = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] <= 0.0) continue;
    const auto idx = geo.unflat(k);
    for (std::size_t a = 0; a < 2; ++a) {
      lo[a] = std::min(lo[a], geo.origin()[a] + static_cast<double>(idx[a]) * geo.spacing());
      hi[a] = std::max(hi[a], geo.origin()[a] + static_cast<double>(idx[a] + 1) * geo.spacing());
    }
  }
  const std::array<double, 2> center{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  const double R = std::hypot(hi[0] - lo[0], hi[1] - lo[1]);
  const auto u = cone.axis(0);
  const std::array<double, 2> w{-u[1], u[0]};
  const double third = mass / 3.0;
  const double tol = rel_tol * mass;
  // Opening of sector 0 bounds how far along u the inner root can sit.
  const double reach = R * (3.0 + 2.0 / std::tan(0.5 * std::min(cone.opening(0), 3.0)));

  EquipartitionResult res;
  auto apex_at = [&](double s, double t) {
    return std::array<double, 2>{center[0] + s * u[0] + t * w[0], center[1] + s * u[1] + t * w[1]};
  };
  auto masses_at = [&](double s, double t) {
    ++res.evaluations;
    return sector_masses(f, cone, apex_at(s, t));
  };
  // Inner solve: s with mass_0 = mass/3 for fixed t; mass_0 decreases in s.
  auto inner = [&](double t) {
    double a = -reach, b = reach;
    double s = 0.0;
    std::array<double, 3> m{};
    for (int it = 0; it < max_iterations; ++it) {
      s = 0.5 * (a + b);
      m = masses_at(s, t);
      if (std::abs(m[0] - third) <= 0.25 * tol || b - a < 1e-13 * R) break;
      (m[0] > third ? a : b) = s;
    }
    return std::pair{s, m};
  };
  auto outer_value = [](const std::array<double, 3>& m) { return m[1] - m[2]; };

  double ta = -2.0 * R, tb = 2.0 * R;
  auto [sa, ma] = inner(ta);
  auto [sb, mb] = inner(tb);
  double da = outer_value(ma);
  double db = outer_value(mb);
  double best_res = std::numeric_limits<double>::infinity();
  auto record = [&](double s, double t, const std::array<double, 3>& m) {
    double r = 0.0;
    for (double v : m) r = std::max(r, std::abs(v - third));
    if (r < best_res) {
      best_res = r;
      res.apex = apex_at(s, t);
      res.masses = m;
      res.residual = r;
    }
  };
  record(sa, ta, ma);
  record(sb, tb, mb);
  if ((da > 0.0) == (db > 0.0)) {
    res.converged = best_res <= tol;
    return res;
  }
  for (int it = 0; it < max_iterations && best_res > tol; ++it) {
    const double t = 0.5 * (ta + tb);
    auto [s, m] = inner(t);
    record(s, t, m);
    const double d = outer_value(m);
    if ((d > 0.0) == (da > 0.0)) {
      ta = t;
      da = d;
    } else {
      tb = t;
    }
    if (tb - ta < 1e-13 * R) break;
  }
  res.converged = best_res <= tol;
  return res;
}

// ---------------------------------------------------------------------------
// Fiber projection (3-D to 2-D)
// ---------------------------------------------------------------------------

/// F(z, w) = f(x) |C^{z,w}|: collapses the fibers of a cone along one axis.
///
/// `cone` is a cell mask on f's grid. The projection keeps axes perm[0] and
/// perm[1] (in that order) and integrates along perm[2]. f must be constant on
/// the cone cells of each fiber up to `tol` (relative to max f).
inline GridFunction fiber_project(const GridFunction& f, const LevelSet& cone, std::array<int, 3> perm = {0, 1, 2},
                                  double tol = 1e-12) {
  if (f.dim() != 3) throw std::invalid_argument("fiber_project requires a 3-D grid");
  if (!cone.geometry().same_as(f.geometry())) throw std::invalid_argument("cone mask geometry mismatch");
  std::array<int, 3> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<int, 3>{0, 1, 2}) throw std::invalid_argument("perm must be a permutation of {0,1,2}");
  const auto& geo = f.geometry();
  const auto ax = [&](int i) { return static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]); };
  const std::size_t nz = geo.shape()[ax(0)], nw = geo.shape()[ax(1)], nf = geo.shape()[ax(2)];
  const double h = geo.spacing();
  const double slack = tol * std::max(1.0, f.max_value());
  std::vector<double> out(nz * nw, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t w = 0; w < nw; ++w) {
      double vmin = std::numeric_limits<double>::infinity();
      double vmax = 0.0;
      std::size_t count = 0;
      for (std::size_t s = 0; s < nf; ++s) {
        CellShift idx{0, 0, 0};
        idx[ax(0)] = static_cast<Index>(z);
        idx[ax(1)] = static_cast<Index>(w);
        idx[ax(2)] = static_cast<Index>(s);
        if (!cone.contains(idx)) continue;
        const double v = f.at(idx);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        ++count;
      }
      if (count == 0) continue;
      if (vmax - vmin > slack) {
        throw std::invalid_argument("f is not constant on the fiber over (" + std::to_string(z) + ", " +
                                    std::to_string(w) + ")");
      }
      out[z * nw + w] = vmax * static_cast<double>(count) * h;
    }
  }
  return GridFunction({geo.origin()[ax(0)], geo.origin()[ax(1)]}, h, {nz, nw}, std::move(out));
}

/// Smallest relative slack of H(lambda z + (1 - lambda) z') >= M_{lambda,q}(F(z), G(z'))
/// over commensurate pairs, with q = p / (1 + p) for one collapsed dimension.
struct ProjectedCheck {
  double q = 0.0;
  double worst_margin = 0.0;  ///< min over cells of (H - M*_q(F,G)) / max(1, H, M*)
  HypothesisCheck violations;
};

inline ProjectedCheck check_projected_hypothesis(const GridFunction& F, const GridFunction& G, const GridFunction& H,
                                                 double lambda, double p, double tol = 1e-9) {
  ProjectedCheck out;
  out.q = exponent_map(p, 1);
  const MeanParams pq(lambda, out.q, static_cast<int>(F.dim()));
  const GridFunction S = sup_convolution(F, G, pq);
  const CellShift off = S.geometry().offset_in(H.geometry());
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (S[k] <= 0.0) continue;
    CellShift idx = S.geometry().unflat(k);
    for (std::size_t a = 0; a < S.dim(); ++a) idx[a] += off[a];
    const Margin m{H.at(idx), S[k]};
    out.worst_margin = std::min(out.worst_margin, m.relative());
  }
  if (!std::isfinite(out.worst_margin)) out.worst_margin = 0.0;
  out.violations = verify_bbl_hypothesis(F, G, H, pq, tol * std::max(1.0, H.max_value()));
  return out;
}

}  // namespace bbl
