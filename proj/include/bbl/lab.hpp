#pragma once

/**
 * @file lab.hpp
 * @brief Scenario generators, parameter sweeps, log-log slope fits and CSV output.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbl/grid_function.hpp"
#include "bbl/hull.hpp"
#include "bbl/means.hpp"
#include "bbl/stability.hpp"
#include "bbl/supconv.hpp"

namespace bbl {

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// The near-extremal pair f = (1/L_f) 1_[0, L_f], g = (1/L_g) 1_[0, L_g] with
/// L_f ~ 1 + sqrt(delta0) and L_g ~ 1/L_f, snapped to whole cells.
struct SharpnessTriple {
  GridFunction f;
  GridFunction g;
  GridFunction h;  ///< indicator of [0, (L_f + L_g)/2]
  double length_f = 0.0;
  double length_g = 0.0;
  double length_h = 0.0;
  std::size_t cells_f = 0;
  std::size_t cells_g = 0;
};

/// Cell counts are N_f = round((1 + s)/dx) and N_g = ceil(1/(L_f dx)), plus one
/// when N_f + N_g is odd, so that L_f L_g >= 1 and h has a whole number of
/// cells. Heights 1/L make both masses 1; h dominates M_{1/2,p}(f, g) for p <= 0.
inline SharpnessTriple gen_sharpness_pair(double delta0, double spacing) {
  if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be positive");
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  const double s = std::sqrt(delta0);
  const auto nf = static_cast<std::size_t>(std::llround((1.0 + s) / spacing));
  const double lf = static_cast<double>(nf) * spacing;
  auto ng = static_cast<std::size_t>(std::ceil(1.0 / (lf * spacing) - 1e-9));
  if ((nf + ng) % 2 != 0) ++ng;
  const std::size_t nh = (nf + ng) / 2;
  if (nf < 10 || ng < 10 || nh < 10) throw std::invalid_argument("spacing too coarse: fewer than 10 cells in an interval");
  SharpnessTriple t;
  t.cells_f = nf;
  t.cells_g = ng;
  t.length_f = lf;
  t.length_g = static_cast<double>(ng) * spacing;
  t.length_h = static_cast<double>(nh) * spacing;
  t.f = GridFunction::line(0.0, spacing, std::vector<double>(nf, 1.0 / t.length_f));
  t.g = GridFunction::line(0.0, spacing, std::vector<double>(ng, 1.0 / t.length_g));
  t.h = GridFunction::line(0.0, spacing, std::vector<double>(nh, 1.0));
  return t;
}

/// A rectangular dent: cells whose centers lie within width/2 of `center` on
/// every axis are multiplied by 1 - depth.
struct Hole {
  std::vector<double> center;
  double width = 0.0;
  double depth = 1.0;
};

inline GridFunction gen_dented(const GridFunction& base, const std::vector<Hole>& holes) {
  const auto& geo = base.geometry();
  std::vector<double> values(base.values().begin(), base.values().end());
  std::vector<std::uint8_t> taken(values.size(), 0);
  for (const auto& hole : holes) {
    if (hole.center.size() != base.dim()) throw std::invalid_argument("hole center has the wrong dimension");
    if (!(hole.width > 0.0)) throw std::invalid_argument("hole width must be positive");
    if (!(hole.depth >= 0.0 && hole.depth <= 1.0)) throw std::invalid_argument("hole depth must lie in [0, 1]");
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const auto idx = geo.unflat(k);
      bool in = true;
      for (std::size_t a = 0; a < base.dim() && in; ++a) {
        const double x = geo.center(a, idx[a]);
        in = x >= hole.center[a] - 0.5 * hole.width && x < hole.center[a] + 0.5 * hole.width;
      }
      if (in) cells.push_back(k);
    }
    if (cells.empty()) throw std::invalid_argument("hole covers no cell");
    for (auto k : cells) {
      if (base[k] <= 0.0) throw std::invalid_argument("hole leaves the support of the base function");
      if (taken[k]) throw std::invalid_argument("holes overlap");
      // The dent must be surrounded by support along every axis.
      const auto idx = geo.unflat(k);
      for (std::size_t a = 0; a < base.dim(); ++a) {
        for (Index step : {-1, 1}) {
          CellShift nb = idx;
          nb[a] += step;
          if (base.at(nb) <= 0.0) throw std::invalid_argument("hole touches the boundary of the support");
        }
      }
    }
    for (auto k : cells) {
      taken[k] = 1;
      values[k] *= 1.0 - hole.depth;
    }
  }
  return base.with_values(std::move(values));
}

/// 1_[0,1] + eps 1_[v, v+1] on a grid of the given spacing starting at 0.
inline GridFunction gen_two_bump(double eps, double v, double spacing) {
  if (!(v > 2.0)) throw std::invalid_argument("two-bump separation must exceed 2");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
  const auto n = static_cast<std::size_t>(std::llround((v + 1.0) / spacing));
  std::vector<double> values(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * spacing;
    if (x < 1.0) values[k] = 1.0;
    if (x >= v && x < v + 1.0) values[k] = eps;
  }
  return GridFunction::line(0.0, spacing, std::move(values));
}

enum class Shape { indicator, hat, gaussian };

inline Shape parse_shape(const std::string& name) {
  if (name == "indicator") return Shape::indicator;
  if (name == "hat") return Shape::hat;
  if (name == "gaussian" || name == "bump") return Shape::gaussian;
  throw std::invalid_argument("unknown shape '" + name + "'");
}

inline std::string shape_name(Shape s) {
  switch (s) {
    case Shape::indicator:
      return "indicator";
    case Shape::hat:
      return "hat";
    case Shape::gaussian:
      return "gaussian";
  }
  return "?";
}

/// Shapes that are p-concave for every p <= 1, sampled on [0, 1]:
/// the indicator, the hat peaking at 1/2, and exp(-x^2/2) on |x| <= 1 rescaled
/// to [0, 1] (the concave part of the Gaussian).
inline GridFunction gen_shape(Shape shape, double spacing) {
  const auto n = static_cast<std::size_t>(std::llround(1.0 / spacing));
  if (n < 3) throw std::invalid_argument("spacing too coarse");
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * spacing;
    switch (shape) {
      case Shape::indicator:
        values[k] = 1.0;
        break;
      case Shape::hat:
        values[k] = 1.0 - std::abs(2.0 * x - 1.0);
        break;
      case Shape::gaussian: {
        const double u = 2.0 * x - 1.0;
        values[k] = std::exp(-0.5 * u * u);
        break;
      }
    }
  }
  return GridFunction::line(0.0, spacing, std::move(values));
}

/// Uniform in [0, 1) from the top 53 bits, independent of the library's distributions.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Multiplies each positive value by 1 + amplitude u with u uniform in [-1, 1).
inline GridFunction gen_perturbed(const GridFunction& base, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw std::invalid_argument("amplitude must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::vector<double> values(base.values().begin(), base.values().end());
  for (double& v : values) {
    const double u = 2.0 * unit_uniform(rng) - 1.0;
    if (v > 0.0) v *= 1.0 + amplitude * u;
  }
  return base.with_values(std::move(values));
}

// ---------------------------------------------------------------------------
// Slope fits
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares of log y on log x.
inline SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y lengths differ");
  if (x.size() < 4) throw std::invalid_argument("slope fit needs at least 4 points");
  const auto n = static_cast<double>(x.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("slope fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 1e-24 * n)) throw std::invalid_argument("degenerate x range");
  SlopeFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += r * r;
  }
  fit.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// "a:b:logN" (N log-spaced values from a to b) or a comma-separated list.
inline std::vector<double> parse_delta_grid(const std::string& text) {
  std::vector<double> out;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const auto colon2 = text.find(':', colon + 1);
    if (colon2 == std::string::npos) throw std::invalid_argument("expected a:b:logN");
    const double a = std::stod(text.substr(0, colon));
    const double b = std::stod(text.substr(colon + 1, colon2 - colon - 1));
    const std::string count = text.substr(colon2 + 1);
    if (count.rfind("log", 0) != 0) throw std::invalid_argument("expected a:b:logN");
    const int n = std::stoi(count.substr(3));
    if (!(a > 0.0 && b > 0.0) || n < 1) throw std::invalid_argument("log grid needs positive endpoints and N >= 1");
    for (int i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      out.push_back(std::exp(std::log(a) + t * (std::log(b) - std::log(a))));
    }
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty delta0 grid");
  return out;
}

enum class Family { sharpness, dented, perturbed };

inline Family parse_family(const std::string& name) {
  if (name == "sharpness") return Family::sharpness;
  if (name == "dented") return Family::dented;
  if (name == "perturbed") return Family::perturbed;
  throw std::invalid_argument("unknown family '" + name + "'");
}

inline std::string family_name(Family f) {
  switch (f) {
    case Family::sharpness:
      return "sharpness";
    case Family::dented:
      return "dented";
    case Family::perturbed:
      return "perturbed";
  }
  return "?";
}

/// How h is chosen for a scenario row.
enum class HConvention { supconv, generator };

inline std::string h_convention_name(HConvention h) { return h == HConvention::supconv ? "supconv" : "generator"; }

struct SweepConfig {
  Family family = Family::sharpness;
  std::vector<double> delta0;
  double lambda = 0.5;
  double p = 0.0;
  double spacing = 1e-3;
  double c = -1.0;  ///< shaving constant; negative means the default 0.1 lambda
  HConvention h_convention = HConvention::supconv;
  std::uint64_t seed = 1;
  bool timing = false;  ///< record wall time; otherwise runtime_ms is 0 for reproducible output
};

struct SweepRow {
  std::string family;
  std::uint64_t seed = 0;
  double delta0 = 0.0;
  double lambda = 0.0;
  double p = 0.0;
  double spacing = 0.0;
  std::string h_convention;
  double delta = 0.0;
  Index shift = 0;
  double symdiff_distance = 0.0;
  double linear_gap = 0.0;
  double main_distance = 0.0;
  double ratio_sqrt = 0.0;
  double ratio_linear = 0.0;
  double ratio_main = 0.0;
  double shave_removed = 0.0;
  std::size_t violations = 0;
  bool masses_match = true;
  double runtime_ms = 0.0;
  bool valid() const { return violations == 0 && masses_match && delta > 0.0; }
};

/// The scenario (f, g, h) behind one sweep row.
struct Scenario {
  GridFunction f;
  GridFunction g;
  GridFunction h;
};

/// sharpness: the snapped pair at delta0.
/// dented: f = g = 1_[0,1] with a centered full-depth hole of width delta0.
/// perturbed: f = g = the hat with cellwise multiplicative noise of amplitude delta0.
inline Scenario make_scenario(const SweepConfig& cfg, double delta0) {
  const MeanParams params(cfg.lambda, cfg.p);
  Scenario s;
  switch (cfg.family) {
    case Family::sharpness: {
      auto t = gen_sharpness_pair(delta0, cfg.spacing);
      s.f = std::move(t.f);
      s.g = std::move(t.g);
      s.h = std::move(t.h);
      break;
    }
    case Family::dented: {
      s.f = gen_dented(gen_shape(Shape::indicator, cfg.spacing), {Hole{{0.5}, delta0, 1.0}});
      s.g = s.f;
      break;
    }
    case Family::perturbed: {
      s.f = gen_perturbed(gen_shape(Shape::hat, cfg.spacing), delta0, cfg.seed);
      s.g = s.f;
      break;
    }
  }
  if (cfg.family != Family::sharpness || cfg.h_convention == HConvention::supconv) {
    s.h = sup_convolution(s.f, s.g, params);
  }
  return s;
}

inline SweepRow run_scenario(const SweepConfig& cfg, double delta0) {
  const auto start = std::chrono::steady_clock::now();
  const MeanParams params(cfg.lambda, cfg.p);
  const double c = cfg.c > 0.0 ? cfg.c : default_shave_constant(params);
  const Scenario s = make_scenario(cfg, delta0);
  const StabilityReport rep = certify_main(s.f, s.g, s.h, params, c);
  SweepRow row;
  row.family = family_name(cfg.family);
  row.seed = cfg.seed;
  row.delta0 = delta0;
  row.lambda = cfg.lambda;
  row.p = cfg.p;
  row.spacing = cfg.spacing;
  row.h_convention = cfg.family == Family::sharpness ? h_convention_name(cfg.h_convention) : "supconv";
  row.delta = rep.delta;
  row.shift = rep.best_shift[0];
  row.symdiff_distance = rep.symdiff_distance;
  row.linear_gap = rep.linear_gap;
  row.main_distance = rep.main_distance;
  row.ratio_sqrt = rep.ratio_sqrt;
  row.ratio_linear = rep.ratio_linear;
  row.ratio_main = rep.ratio_main;
  row.shave_removed = rep.shave_removed;
  row.violations = rep.hypothesis_violations;
  row.masses_match = rep.masses_match;
  if (cfg.timing) {
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

/// One row per delta0, sorted by (family, delta0).
inline std::vector<SweepRow> sweep(const SweepConfig& cfg) {
  std::vector<double> grid = cfg.delta0;
  std::sort(grid.begin(), grid.end());
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double d0 : grid) rows.push_back(run_scenario(cfg, d0));
  return rows;
}

inline SlopeFit fit_symdiff_slope(const std::vector<SweepRow>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.delta);
    y.push_back(r.symdiff_distance);
  }
  return fit_loglog_slope(x, y);
}

inline const char* sweep_csv_header() {
  return "family,seed,delta0,lambda,p,spacing,h_convention,delta,shift,symdiff_distance,linear_gap,"
         "main_distance,ratio_sqrt,ratio_linear,ratio_main,shave_removed,violations,masses_match,valid,runtime_ms";
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << sweep_csv_header() << '\n';
  for (const auto& r : rows) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << r.family << ',' << r.seed << ',' << r.delta0 << ',' << r.lambda << ',' << r.p << ',' << r.spacing << ','
        << r.h_convention << ',' << r.delta << ',' << r.shift << ',' << r.symdiff_distance << ',' << r.linear_gap
        << ',' << r.main_distance << ',' << r.ratio_sqrt << ',' << r.ratio_linear << ',' << r.ratio_main << ','
        << r.shave_removed << ',' << r.violations << ',' << (r.masses_match ? 1 : 0) << ','
        << (r.valid() ? 1 : 0) << ',' << r.runtime_ms << '\n';
  }
}

}  // namespace bbl
