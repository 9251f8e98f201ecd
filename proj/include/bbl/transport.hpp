#pragma once

/**
 * @file transport.hpp
 * @brief Monotone 1-D transports by cumulative-mass matching (in space and in
 *        height) and the level-set diagnostics I_1 ... I_5.
 *
 * A map is stored as matched breakpoint pairs (x_k, T(x_k)) and is linear in
 * between. A jump of T is a repeated domain breakpoint; evaluating at a jump
 * returns the lower value and derivatives are one-sided from below.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbl/grid_function.hpp"
#include "bbl/hull.hpp"
#include "bbl/means.hpp"
#include "bbl/supconv.hpp"

namespace bbl {

/// Nondecreasing piecewise-linear cumulative profile.
struct Cumulative {
  std::vector<double> breaks;
  std::vector<double> cum;

  double total() const { return cum.empty() ? 0.0 : cum.back(); }

  double operator()(double x) const {
    if (breaks.empty() || x <= breaks.front()) return cum.empty() ? 0.0 : cum.front();
    if (x >= breaks.back()) return cum.back();
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    const auto i = static_cast<std::size_t>(it - breaks.begin());
    const double frac = (x - breaks[i - 1]) / (breaks[i] - breaks[i - 1]);
    return cum[i - 1] + frac * (cum[i] - cum[i - 1]);
  }

  /// The closed interval of positions where the profile equals `level`.
  std::pair<double, double> preimage(double level) const {
    if (level <= cum.front()) {
      std::size_t j = 0;
      while (j + 1 < cum.size() && cum[j + 1] <= cum.front()) ++j;
      return {breaks.front(), breaks[j]};
    }
    if (level >= cum.back()) {
      std::size_t j = cum.size() - 1;
      while (j > 0 && cum[j - 1] >= cum.back()) --j;
      return {breaks[j], breaks.back()};
    }
    const auto lo = std::lower_bound(cum.begin(), cum.end(), level);
    const auto hi = std::upper_bound(cum.begin(), cum.end(), level);
    const auto i = static_cast<std::size_t>(lo - cum.begin());
    const auto k = static_cast<std::size_t>(hi - cum.begin());
    if (i < k) return {breaks[i], breaks[k - 1]};
    // Strictly inside segment (i-1, i).
    const double frac = (level - cum[i - 1]) / (cum[i] - cum[i - 1]);
    const double x = breaks[i - 1] + frac * (breaks[i] - breaks[i - 1]);
    return {x, x};
  }
};

/// Cumulative mass at the cell boundaries of a 1-D function.
inline Cumulative spatial_cumulative(const GridFunction& f) {
  if (f.dim() != 1) throw std::invalid_argument("spatial transport requires 1-D functions");
  Cumulative c;
  const double h = f.spacing();
  c.breaks.reserve(f.size() + 1);
  c.cum.reserve(f.size() + 1);
  double acc = 0.0;
  c.breaks.push_back(f.origin()[0]);
  c.cum.push_back(0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    acc += f[k] * h;
    c.breaks.push_back(f.origin()[0] + static_cast<double>(k + 1) * h);
    c.cum.push_back(acc);
  }
  return c;
}

/// t -> integral_0^t |F_s| ds, with breakpoints at 0 and the distinct values of f.
inline Cumulative height_cumulative(const GridFunction& f) {
  std::vector<double> v(f.values().begin(), f.values().end());
  std::sort(v.begin(), v.end());
  Cumulative c;
  c.breaks.push_back(0.0);
  c.cum.push_back(0.0);
  double prev = 0.0;
  double acc = 0.0;
  const double vol = f.cell_volume();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= prev) continue;
    acc += (v[i] - prev) * static_cast<double>(v.size() - i) * vol;
    c.breaks.push_back(v[i]);
    c.cum.push_back(acc);
    prev = v[i];
  }
  return c;
}

enum class TransportKind { spatial, height };

/// Monotone piecewise-linear map with matched cumulative masses.
struct TransportMap1D {
  TransportKind kind = TransportKind::spatial;
  std::vector<double> domain_breaks;  ///< nondecreasing; a repeated entry is a jump
  std::vector<double> values;         ///< nondecreasing
  double source_mass = 0.0;
  double target_mass = 0.0;

  static TransportMap1D identity(double lo, double hi, TransportKind kind = TransportKind::spatial) {
    TransportMap1D t;
    t.kind = kind;
    t.domain_breaks = {lo, hi};
    t.values = {lo, hi};
    return t;
  }

  double operator()(double x) const {
    if (x <= domain_breaks.front()) return values.front();
    if (x > domain_breaks.back()) return values.back();
    const auto it = std::lower_bound(domain_breaks.begin(), domain_breaks.end(), x);
    const auto i = static_cast<std::size_t>(it - domain_breaks.begin());
    if (domain_breaks[i] == x) return values[i];
    const double frac = (x - domain_breaks[i - 1]) / (domain_breaks[i] - domain_breaks[i - 1]);
    return values[i - 1] + frac * (values[i] - values[i - 1]);
  }

  /// dT/dx from below; 0 at or before the first breakpoint.
  double derivative(double x) const {
    const auto it = std::lower_bound(domain_breaks.begin(), domain_breaks.end(), x);
    auto i = static_cast<std::size_t>(it - domain_breaks.begin());
    if (i == 0) return 0.0;
    if (i == domain_breaks.size()) return 0.0;
    return (values[i] - values[i - 1]) / (domain_breaks[i] - domain_breaks[i - 1]);
  }
};

/// Matches two cumulative profiles level by level. The target profile is
/// rescaled to the source mass.
inline TransportMap1D monotone_match(const Cumulative& source, Cumulative target, TransportKind kind) {
  const double ms = source.total();
  const double mt = target.total();
  if (!(ms > 0.0) || !(mt > 0.0)) throw std::invalid_argument("transport requires positive masses");
  if (std::abs(ms - mt) > 1e-9 * std::max(ms, mt)) {
    throw std::invalid_argument("transport requires equal masses (relative 1e-9)");
  }
  for (double& c : target.cum) c *= ms / mt;
  target.cum.back() = ms;

  std::vector<double> levels = source.cum;
  levels.insert(levels.end(), target.cum.begin(), target.cum.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  TransportMap1D t;
  t.kind = kind;
  t.source_mass = ms;
  t.target_mass = mt;
  auto push = [&](double x, double y) {
    if (!t.domain_breaks.empty() && t.domain_breaks.back() == x && t.values.back() == y) return;
    // Keep both sequences nondecreasing in the presence of rounding.
    if (!t.domain_breaks.empty()) {
      x = std::max(x, t.domain_breaks.back());
      y = std::max(y, t.values.back());
    }
    t.domain_breaks.push_back(x);
    t.values.push_back(y);
  };
  for (double level : levels) {
    const auto [xl, xr] = source.preimage(level);
    const auto [yl, yr] = target.preimage(level);
    push(xl, yl);
    push(xr, yr);
  }
  return t;
}

/// T with integral_{-inf}^x f = integral_{-inf}^{T(x)} g.
inline TransportMap1D spatial_transport(const GridFunction& f, const GridFunction& g) {
  return monotone_match(spatial_cumulative(f), spatial_cumulative(g), TransportKind::spatial);
}

/// T on heights with integral_0^t |F_s| ds = integral_0^{T(t)} |G_s| ds.
inline TransportMap1D height_transport(const GridFunction& f, const GridFunction& g) {
  return monotone_match(height_cumulative(f), height_cumulative(g), TransportKind::height);
}

/// Largest |F(x) - G(T(x))| over the map's breakpoints and the kinks of F,
/// with G rescaled to the mass of f.
inline double pushforward_check(const TransportMap1D& T, const GridFunction& f, const GridFunction& g) {
  const bool spatial = T.kind == TransportKind::spatial;
  const Cumulative F = spatial ? spatial_cumulative(f) : height_cumulative(f);
  const Cumulative G = spatial ? spatial_cumulative(g) : height_cumulative(g);
  const double mf = F.total();
  const double mg = G.total();
  if (mf == 0.0 && mg == 0.0) return 0.0;
  const double rescale = mg > 0.0 ? mf / mg : 1.0;
  std::vector<double> points = T.domain_breaks;
  points.insert(points.end(), F.breaks.begin(), F.breaks.end());
  if (spatial) points.insert(points.end(), G.breaks.begin(), G.breaks.end());
  double worst = 0.0;
  for (double x : points) worst = std::max(worst, std::abs(F(x) - G(T(x)) * rescale));
  return worst;
}

// ---------------------------------------------------------------------------
// Translation-minimized symmetric differences
// ---------------------------------------------------------------------------

namespace detail {

struct RealInterval {
  double lo, hi;
};

inline std::vector<RealInterval> real_intervals(const LevelSet& A) {
  std::vector<RealInterval> out;
  const double h = A.geometry().spacing();
  const double o = A.geometry().origin()[0];
  for (const auto& iv : A.intervals()) {
    out.push_back({o + static_cast<double>(iv.lo) * h, o + static_cast<double>(iv.hi) * h});
  }
  return out;
}

inline double overlap(const std::vector<RealInterval>& A, double x, const std::vector<RealInterval>& B) {
  double s = 0.0;
  for (const auto& a : A) {
    for (const auto& b : B) s += std::max(0.0, std::min(a.hi + x, b.hi) - std::max(a.lo + x, b.lo));
  }
  return s;
}

}  // namespace detail

/// min over translations x of |(x + A) delta B|.
///
/// In 1-D the minimum is over all real x (the overlap is piecewise linear with
/// kinks where endpoints meet). In 2-D it is over translations carrying A's
/// cells onto B's cells.
inline double min_translate_symmetric_difference(const LevelSet& A, const LevelSet& B) {
  const double total = A.measure() + B.measure();
  if (A.empty() || B.empty()) return total;
  if (A.dim() != B.dim()) throw std::invalid_argument("dimension mismatch");
  if (A.dim() == 1) {
    const auto ia = detail::real_intervals(A);
    const auto ib = detail::real_intervals(B);
    double best = 0.0;
    for (const auto& a : ia) {
      for (const auto& b : ib) {
        for (double x : {b.lo - a.lo, b.hi - a.lo, b.lo - a.hi, b.hi - a.hi}) {
          best = std::max(best, detail::overlap(ia, x, ib));
        }
      }
    }
    return std::max(0.0, total - 2.0 * best);
  }
  if (A.dim() != 2) throw std::invalid_argument("symmetric differences are supported in dimensions 1 and 2");
  constexpr Index kBig = std::numeric_limits<Index>::max();
  Index lo[2] = {kBig, kBig}, hi[2] = {-kBig, -kBig};
  Index blo[2] = {kBig, kBig}, bhi[2] = {-kBig, -kBig};
  std::vector<CellShift> a_cells;
  for (std::size_t i = 0; i < A.mask().size(); ++i) {
    if (A.contains(i)) a_cells.push_back(A.geometry().unflat(i));
  }
  for (const auto& c : a_cells) {
    for (int d = 0; d < 2; ++d) {
      lo[d] = std::min(lo[d], c[d]);
      hi[d] = std::max(hi[d], c[d]);
    }
  }
  for (std::size_t i = 0; i < B.mask().size(); ++i) {
    if (!B.contains(i)) continue;
    const auto c = B.geometry().unflat(i);
    for (int d = 0; d < 2; ++d) {
      blo[d] = std::min(blo[d], c[d]);
      bhi[d] = std::max(bhi[d], c[d]);
    }
  }
  std::size_t best = 0;
  for (Index kx = blo[0] - hi[0]; kx <= bhi[0] - lo[0]; ++kx) {
    for (Index ky = blo[1] - hi[1]; ky <= bhi[1] - lo[1]; ++ky) {
      std::size_t hit = 0;
      for (const auto& c : a_cells) hit += B.contains(CellShift{c[0] + kx, c[1] + ky, 0}) ? 1 : 0;
      best = std::max(best, hit);
    }
  }
  return std::max(0.0, total - 2.0 * static_cast<double>(best) * A.geometry().cell_volume());
}

// ---------------------------------------------------------------------------
// Level-set diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticsReport {
  double alpha = 0.0;
  /// integral over I_k of |F_t| dt, k = 1..5
  std::array<double, 5> masses{};
  /// integral over the union I of |F_t| dt
  double bad_mass = 0.0;
  /// integral over the good heights of |co(F_t) \ F_t| + |co(G_T(t)) \ G_T(t)|
  double hull_gap_integral = 0.0;
  double mass_f = 0.0;
  std::size_t height_intervals = 0;
};

/// Per-height membership record of level_diagnostics.
struct HeightSample {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double t = 0.0;   ///< representative height
  double Tt = 0.0;  ///< T(t)
  double measure_f = 0.0;
  std::array<bool, 5> in{};
  double hull_gap = 0.0;
};

namespace detail {

inline LevelSet level_set_at(const GridFunction& f, double t) { return level_set(f, std::max(0.0, t)); }

/// Heights in (lo, hi) where t -> M(t, T(t)) crosses one of the levels.
inline void mean_crossings(const TransportMap1D& T, double lambda, double p, double lo, double hi,
                           const std::vector<double>& levels, std::vector<double>& out) {
  auto m = [&](double t) { return power_mean(lambda, p, t, T(t)); };
  const double mlo = m(lo);
  const double mhi = m(hi);
  for (double c : levels) {
    if (!(c > mlo && c < mhi)) continue;
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
      const double mid = 0.5 * (a + b);
      (m(mid) < c ? a : b) = mid;
    }
    out.push_back(0.5 * (a + b));
  }
}

}  // namespace detail

/// Sub-intervals of [0, max f] on which every diagnostic is constant, each
/// with its membership flags.
inline std::vector<HeightSample> diagnostic_heights(const GridFunction& f, const GridFunction& g,
                                                    const GridFunction& h, const MeanParams& params,
                                                    double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (f.dim() != g.dim() || f.dim() != h.dim()) throw std::invalid_argument("dimension mismatch");
  const auto T = height_transport(f, g);
  const double top = f.max_value();
  const double lambda = params.lambda();
  const double p = params.p();
  const Ratio r = params.ratio();
  const double n = static_cast<double>(f.dim());

  std::vector<double> cuts{0.0, top};
  for (double v : f.values()) cuts.push_back(v);
  // Heights where G_{T(t)} changes: the lowest t with T(t) reaching each value of g.
  for (double v : g.values()) {
    if (v <= 0.0) continue;
    double a = 0.0, b = top;
    if (!(T(b) >= v)) continue;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
      const double mid = 0.5 * (a + b);
      (T(mid) < v ? a : b) = mid;
    }
    cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c < 0.0 || c > top; }), cuts.end());

  std::vector<double> h_levels(h.values().begin(), h.values().end());
  std::sort(h_levels.begin(), h_levels.end());
  h_levels.erase(std::unique(h_levels.begin(), h_levels.end()), h_levels.end());
  std::vector<double> refined = cuts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    detail::mean_crossings(T, lambda, p, cuts[i], cuts[i + 1], h_levels, refined);
  }
  std::sort(refined.begin(), refined.end());
  refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

  std::vector<HeightSample> samples;
  for (std::size_t i = 0; i + 1 < refined.size(); ++i) {
    HeightSample s;
    s.t_lo = refined[i];
    s.t_hi = refined[i + 1];
    if (!(s.t_hi > s.t_lo)) continue;
    s.t = 0.5 * (s.t_lo + s.t_hi);
    s.Tt = T(s.t);
    const LevelSet F = detail::level_set_at(f, s.t);
    const LevelSet G = detail::level_set_at(g, s.Tt);
    s.measure_f = F.measure();
    if (F.empty()) continue;
    const double mG = G.measure();

    const double slope = mG > 0.0 ? s.measure_f / mG : std::numeric_limits<double>::infinity();
    s.in[0] = slope < 1.0 - alpha || slope > 1.0 + alpha;

    const LevelSet coF = convex_hull_set(F);
    const double gapF = coF.measure() - F.measure();
    double gapG = 0.0;
    LevelSet coG;
    if (!G.empty()) {
      coG = convex_hull_set(G);
      gapG = coG.measure() - mG;
    }
    s.in[1] = gapF >= alpha * s.measure_f || (!G.empty() && gapG >= alpha * mG) || G.empty();
    s.hull_gap = gapF + gapG;

    if (G.empty()) {
      s.in[2] = true;
    } else {
      const double comb = minkowski_combination(F, G, r).measure();
      s.in[2] = comb >= (1.0 + alpha) * power_mean(lambda, 1.0 / n, s.measure_f, mG);
    }

    const LevelSet H = detail::level_set_at(h, power_mean(lambda, p, s.t, s.Tt));
    s.in[3] = min_translate_symmetric_difference(F, H) >= alpha * s.measure_f;
    s.in[4] = G.empty() || min_translate_symmetric_difference(coF, coG) >= alpha * s.measure_f;
    samples.push_back(s);
  }
  return samples;
}

/// Integrals of |F_t| over the bad height sets I_1 ... I_5, computed exactly for
/// staircase inputs.
inline DiagnosticsReport level_diagnostics(const GridFunction& f, const GridFunction& g, const GridFunction& h,
                                           const MeanParams& params, double alpha) {
  DiagnosticsReport rep;
  rep.alpha = alpha;
  rep.mass_f = integral(f);
  const auto samples = diagnostic_heights(f, g, h, params, alpha);
  rep.height_intervals = samples.size();
  for (const auto& s : samples) {
    const double w = s.measure_f * (s.t_hi - s.t_lo);
    bool bad = false;
    for (std::size_t k = 0; k < 5; ++k) {
      if (s.in[k]) {
        rep.masses[k] += w;
        bad = true;
      }
    }
    if (bad) {
      rep.bad_mass += w;
    } else {
      rep.hull_gap_integral += s.hull_gap * (s.t_hi - s.t_lo);
    }
  }
  return rep;
}

}  // namespace bbl
