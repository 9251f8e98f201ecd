#pragma once

/**
 * @file supconv.hpp
 * @brief Grid sup-convolution M*_{lambda,p}(f, g), Minkowski combinations of
 *        cell sets, and checks of the hypothesis h(lambda x + (1-lambda) y) >=
 *        M_{lambda,p}(f(x), g(y)).
 *
 * With lambda = a/b, cell i of f and cell j of g combine into output cell
 * k = (a i + (b - a) j) / b whenever that is an integer. The output grid has
 * origin lambda o_f + (1 - lambda) o_g, so no interpolation ever happens.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bbl/grid_function.hpp"
#include "bbl/means.hpp"

namespace bbl {

namespace detail {

/// Order-preserving surrogate for M_{lambda,p}: the mean is increasing in
/// lambda F(x) + (1 - lambda) F(y).
struct MeanOrder {
  double p = 0.0;

  double operator()(double v) const {
    if (p == 0.0) return std::log(v);
    if (std::abs(p) < 1e-3) return std::expm1(p * std::log(v)) / p;
    return p > 0.0 ? std::pow(v, p) : -std::pow(v, p);
  }
};

inline Index floor_div(Index a, Index b) {
  Index q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Index positive_mod(Index a, Index b) {
  const Index r = a % b;
  return r < 0 ? r + b : r;
}

/// Inverse of x modulo m (gcd(x, m) = 1).
inline Index mod_inverse(Index x, Index m) {
  x = positive_mod(x, m);
  for (Index y = 1; y < m; ++y) {
    if ((x * y) % m == 1) return y;
  }
  return m == 1 ? 0 : throw std::logic_error("no modular inverse");
}

/// Output grid of a lambda-combination of two grids with shared spacing.
inline GridGeometry combination_geometry(const GridGeometry& f, const GridGeometry& g, Ratio r) {
  if (f.dim() != g.dim()) throw std::invalid_argument("dimension mismatch");
  if (std::abs(f.spacing() - g.spacing()) > 1e-12 * f.spacing()) {
    throw std::invalid_argument("sup-convolution requires a shared grid spacing");
  }
  const double lambda = r.value();
  std::vector<double> origin(f.dim());
  std::vector<std::size_t> shape(f.dim());
  for (std::size_t a = 0; a < f.dim(); ++a) {
    origin[a] = lambda * f.origin()[a] + (1.0 - lambda) * g.origin()[a];
    const Index top = r.num * (static_cast<Index>(f.shape()[a]) - 1) + (r.den - r.num) * (static_cast<Index>(g.shape()[a]) - 1);
    shape[a] = static_cast<std::size_t>(floor_div(top, r.den) + 1);
  }
  return GridGeometry(std::move(origin), f.spacing(), std::move(shape));
}

/// Pair enumeration shared by the sup-convolution kernel and the set version.
///
/// Cells of g are bucketed by residue class modulo b on every axis; cell i of
/// f only meets the bucket whose residues make a i + (b - a) j divisible by b.
/// Within a bucket the output flat index is base(i) + offset(j).
class PairIndex {
 public:
  struct Entry {
    std::size_t g_flat;
    std::int64_t out_offset;
  };

  PairIndex(const GridGeometry& f, const GridGeometry& g, const GridGeometry& out, Ratio r,
            const std::vector<std::size_t>& g_cells)
      : f_(f), out_(out), r_(r), dim_(f.dim()) {
    const Index b = r.den;
    const Index c = r.den - r.num;
    inv_c_ = mod_inverse(c, b);
    std::size_t buckets = 1;
    for (std::size_t a = 0; a < dim_; ++a) buckets *= static_cast<std::size_t>(b);
    buckets_.resize(buckets);
    for (auto gi : g_cells) {
      const CellShift j = g.unflat(gi);
      std::size_t bucket = 0;
      std::int64_t off = 0;
      for (std::size_t a = 0; a < dim_; ++a) {
        const Index res = positive_mod(j[a], b);
        bucket = bucket * static_cast<std::size_t>(b) + static_cast<std::size_t>(res);
        off = off * static_cast<std::int64_t>(out.shape()[a]) + c * ((j[a] - res) / b);
      }
      buckets_[bucket].push_back({gi, off});
    }
  }

  /// Bucket compatible with f cell `fi` and the output base index for it.
  std::pair<const std::vector<Entry>*, std::int64_t> partners(std::size_t fi) const {
    const Index b = r_.den;
    const Index a_num = r_.num;
    const Index c = r_.den - r_.num;
    const CellShift i = f_.unflat(fi);
    std::size_t bucket = 0;
    std::int64_t base = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
      // c j = -a i (mod b)  =>  j = -a i c^{-1} (mod b)
      const Index res = positive_mod(-a_num * i[a] * inv_c_, b);
      bucket = bucket * static_cast<std::size_t>(b) + static_cast<std::size_t>(res);
      base = base * static_cast<std::int64_t>(out_.shape()[a]) + (a_num * i[a] + c * res) / b;
    }
    return {&buckets_[bucket], base};
  }

 private:
  GridGeometry f_;
  GridGeometry out_;
  Ratio r_;
  std::size_t dim_;
  Index inv_c_ = 1;
  std::vector<std::vector<Entry>> buckets_;
};

inline std::vector<std::size_t> positive_cells(const GridFunction& f) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0.0) cells.push_back(i);
  }
  return cells;
}

inline void require_low_dim(const GridFunction& f) {
  if (f.dim() > 2) throw std::invalid_argument("operation supports 1-D and 2-D grids");
}

}  // namespace detail

/// Sup-convolution together with the maximizing pair of every output cell.
struct SupConvolution {
  GridFunction value;
  /// Flat f-cell and g-cell indices of the maximizer; -1 where no pair exists.
  std::vector<std::int64_t> arg_f;
  std::vector<std::int64_t> arg_g;
};

inline SupConvolution sup_convolution_with_argmax(const GridFunction& f, const GridFunction& g,
                                                  const MeanParams& params) {
  detail::require_low_dim(f);
  const Ratio r = params.ratio();
  const GridGeometry out = detail::combination_geometry(f.geometry(), g.geometry(), r);
  const auto f_cells = detail::positive_cells(f);
  const auto g_cells = detail::positive_cells(g);
  const detail::PairIndex index(f.geometry(), g.geometry(), out, r, g_cells);

  const detail::MeanOrder order{params.p()};
  const double lambda = params.lambda();
  std::vector<double> g_key(g.size(), 0.0);
  for (auto gi : g_cells) g_key[gi] = (1.0 - lambda) * order(g[gi]);

  std::vector<double> best(out.size(), -std::numeric_limits<double>::infinity());
  SupConvolution result;
  result.arg_f.assign(out.size(), -1);
  result.arg_g.assign(out.size(), -1);
  for (auto fi : f_cells) {
    const double fk = lambda * order(f[fi]);
    const auto [bucket, base] = index.partners(fi);
    for (const auto& e : *bucket) {
      const auto k = static_cast<std::size_t>(base + e.out_offset);
      const double key = fk + g_key[e.g_flat];
      if (key > best[k]) {
        best[k] = key;
        result.arg_f[k] = static_cast<std::int64_t>(fi);
        result.arg_g[k] = static_cast<std::int64_t>(e.g_flat);
      }
    }
  }
  std::vector<double> values(out.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (result.arg_f[k] >= 0) {
      values[k] = power_mean(lambda, params.p(), f[static_cast<std::size_t>(result.arg_f[k])],
                             g[static_cast<std::size_t>(result.arg_g[k])]);
    }
  }
  result.value = GridFunction(out, std::move(values));
  return result;
}

/// M*_{lambda,p}(f, g) on the combination grid.
inline GridFunction sup_convolution(const GridFunction& f, const GridFunction& g, const MeanParams& params) {
  return sup_convolution_with_argmax(f, g, params).value;
}

/// lambda A + (1 - lambda) B as a set of cells of the combination grid.
inline LevelSet minkowski_combination(const LevelSet& A, const LevelSet& B, Ratio lambda) {
  if (A.dim() > 2) throw std::invalid_argument("operation supports 1-D and 2-D grids");
  const GridGeometry out = detail::combination_geometry(A.geometry(), B.geometry(), lambda);
  std::vector<std::uint8_t> mask(out.size(), 0);
  if (A.dim() == 1 && lambda.den == 2) {
    // i + j covers every integer between the interval-sum endpoints, so the
    // even ones give a contiguous run of cells.
    for (const auto& ia : A.intervals()) {
      for (const auto& ib : B.intervals()) {
        if (ia.length() == 1 && ib.length() == 1 && ((ia.lo + ib.lo) % 2 != 0)) continue;
        const Index lo = detail::floor_div(ia.lo + ib.lo + 1, 2);
        const Index hi = detail::floor_div(ia.hi - 1 + ib.hi - 1, 2);
        for (Index k = lo; k <= hi; ++k) mask[static_cast<std::size_t>(k)] = 1;
      }
    }
    return LevelSet(out, std::move(mask));
  }
  std::vector<std::size_t> a_cells;
  std::vector<std::size_t> b_cells;
  for (std::size_t i = 0; i < A.mask().size(); ++i) {
    if (A.contains(i)) a_cells.push_back(i);
  }
  for (std::size_t i = 0; i < B.mask().size(); ++i) {
    if (B.contains(i)) b_cells.push_back(i);
  }
  const detail::PairIndex index(A.geometry(), B.geometry(), out, lambda, b_cells);
  for (auto ai : a_cells) {
    const auto [bucket, base] = index.partners(ai);
    for (const auto& e : *bucket) mask[static_cast<std::size_t>(base + e.out_offset)] = 1;
  }
  return LevelSet(out, std::move(mask));
}

/// A pair (x, y) with h(lambda x + (1 - lambda) y) < M(f(x), g(y)) - tol.
struct Violation {
  CellShift x{};  ///< cell of f (f's grid)
  CellShift y{};  ///< cell of g (g's grid)
  CellShift z{};  ///< combined cell (combination grid)
  double required = 0.0;
  double actual = 0.0;
};

struct HypothesisCheck {
  std::vector<Violation> violations;  ///< first `max_reported` violations, ordered by z then x
  std::size_t total = 0;              ///< exact count of violating pairs
  double tolerance = 0.0;
  bool holds() const { return total == 0; }
};

/// Default violation tolerance: 1e-9 max(h).
inline double hypothesis_tolerance(const GridFunction& h) { return 1e-9 * h.max_value(); }

/// Exhaustive check of the BBL hypothesis over all commensurate grid pairs.
///
/// Only output cells where the sup-convolution exceeds h by more than tol can
/// carry violations; those cells are enumerated pair by pair.
inline HypothesisCheck verify_bbl_hypothesis(const GridFunction& f, const GridFunction& g, const GridFunction& h,
                                             const MeanParams& params, double tol = -1.0,
                                             std::size_t max_reported = 10000) {
  const auto sc = sup_convolution_with_argmax(f, g, params);
  const GridGeometry& out = sc.value.geometry();
  if (!out.aligned_with(h.geometry())) {
    throw std::invalid_argument("h is not commensurate with the lambda-combination grid of f and g");
  }
  HypothesisCheck check;
  check.tolerance = tol >= 0.0 ? tol : hypothesis_tolerance(h);
  const CellShift off = out.offset_in(h.geometry());
  const Ratio r = params.ratio();
  const Index b = r.den;
  const Index c = r.den - r.num;
  const auto f_cells = detail::positive_cells(f);

  for (std::size_t k = 0; k < out.size(); ++k) {
    CellShift zk = out.unflat(k);
    CellShift zh = zk;
    for (std::size_t a = 0; a < out.dim(); ++a) zh[a] += off[a];
    const double hv = h.at(zh);
    if (!(sc.value[k] > hv + check.tolerance)) continue;
    for (auto fi : f_cells) {
      const CellShift xi = f.geometry().unflat(fi);
      CellShift yj{0, 0, 0};
      bool ok = true;
      for (std::size_t a = 0; a < out.dim() && ok; ++a) {
        const Index num = b * zk[a] - r.num * xi[a];
        if (num % c != 0) {
          ok = false;
        } else {
          yj[a] = num / c;
        }
      }
      if (!ok || !g.geometry().contains(yj)) continue;
      const double gv = g.at(yj);
      if (gv <= 0.0) continue;
      const double m = power_mean(params.lambda(), params.p(), f[fi], gv);
      if (m > hv + check.tolerance) {
        ++check.total;
        if (check.violations.size() < max_reported) check.violations.push_back({xi, yj, zk, m, hv});
      }
    }
  }
  return check;
}

/// Masses and deficit of a triple (f, g, h).
struct DeficitReport {
  double mass_f = 0.0;
  double mass_g = 0.0;
  double mass_h = 0.0;
  double delta = 0.0;  ///< mass_h / mass_f - 1
  std::size_t pointwise_violations = 0;
};

inline DeficitReport deficit(const GridFunction& f, const GridFunction& g, const GridFunction& h,
                             const MeanParams& params) {
  DeficitReport rep;
  rep.mass_f = integral(f);
  if (!(rep.mass_f > 0.0)) throw std::invalid_argument("deficit requires f with positive mass");
  rep.mass_g = integral(g);
  rep.mass_h = integral(h);
  rep.delta = rep.mass_h / rep.mass_f - 1.0;
  rep.pointwise_violations = verify_bbl_hypothesis(f, g, h, params, -1.0, 0).total;
  return rep;
}

}  // namespace bbl
