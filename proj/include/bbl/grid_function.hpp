#pragma once

/**
 * @file grid_function.hpp
 * @brief Nonnegative piecewise-constant functions on uniform grids, their
 *        super-level sets, and the measure-theoretic primitives on them.
 *
 * Cell k along an axis covers [origin + k h, origin + (k + 1) h) and is
 * represented by its center. Integrals are cell sums times h^dim, so
 * indicators and staircases integrate exactly.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbl {

using Index = std::int64_t;

/// Integer cell offset; only the first dim entries are meaningful.
using CellShift = std::array<Index, 3>;

/// Half-open index interval [lo, hi).
struct Interval {
  Index lo = 0;
  Index hi = 0;
  Index length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

namespace detail {

inline bool near_integer(double x, Index& rounded) {
  rounded = static_cast<Index>(std::llround(x));
  return std::abs(x - static_cast<double>(rounded)) <= 1e-6;
}

}  // namespace detail

/// Geometry shared by grid functions and level sets.
class GridGeometry {
 public:
  GridGeometry() = default;

  GridGeometry(std::vector<double> origin, double spacing, std::vector<std::size_t> shape)
      : origin_(std::move(origin)), spacing_(spacing), shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    if (origin_.size() != shape_.size()) throw std::invalid_argument("origin and shape lengths differ");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) throw std::invalid_argument("spacing must be positive");
    for (auto s : shape_) {
      if (s == 0) throw std::invalid_argument("shape components must be at least 1");
    }
    for (auto o : origin_) {
      if (!std::isfinite(o)) throw std::invalid_argument("origin must be finite");
    }
  }

  std::size_t dim() const { return shape_.size(); }
  double spacing() const { return spacing_; }
  const std::vector<double>& origin() const { return origin_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  double cell_volume() const { return std::pow(spacing_, static_cast<double>(dim())); }

  std::size_t size() const {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  }

  double center(std::size_t axis, Index k) const {
    return origin_[axis] + (static_cast<double>(k) + 0.5) * spacing_;
  }

  /// Row-major flat index; the last axis varies fastest.
  std::size_t flat(const CellShift& idx) const {
    std::size_t out = 0;
    for (std::size_t a = 0; a < dim(); ++a) out = out * shape_[a] + static_cast<std::size_t>(idx[a]);
    return out;
  }

  CellShift unflat(std::size_t flat_index) const {
    CellShift idx{0, 0, 0};
    for (std::size_t a = dim(); a-- > 0;) {
      idx[a] = static_cast<Index>(flat_index % shape_[a]);
      flat_index /= shape_[a];
    }
    return idx;
  }

  bool contains(const CellShift& idx) const {
    for (std::size_t a = 0; a < dim(); ++a) {
      if (idx[a] < 0 || idx[a] >= static_cast<Index>(shape_[a])) return false;
    }
    return true;
  }

  /// True when both grids share dimension and spacing and their cells line up.
  bool aligned_with(const GridGeometry& other) const {
    if (dim() != other.dim()) return false;
    if (std::abs(spacing_ - other.spacing_) > 1e-12 * spacing_) return false;
    for (std::size_t a = 0; a < dim(); ++a) {
      Index k = 0;
      if (!detail::near_integer((origin_[a] - other.origin_[a]) / spacing_, k)) return false;
    }
    return true;
  }

  /// Cell offset d with: cell i of this grid == cell i + d of `other`.
  CellShift offset_in(const GridGeometry& other) const {
    if (!aligned_with(other)) throw std::invalid_argument("grid geometry mismatch");
    CellShift d{0, 0, 0};
    for (std::size_t a = 0; a < dim(); ++a) {
      detail::near_integer((origin_[a] - other.origin_[a]) / spacing_, d[a]);
    }
    return d;
  }

  /// Smallest aligned grid covering both.
  GridGeometry union_with(const GridGeometry& other) const {
    const CellShift d = other.offset_in(*this);
    std::vector<double> origin(dim());
    std::vector<std::size_t> shape(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
      const Index lo = std::min<Index>(0, d[a]);
      const Index hi = std::max<Index>(static_cast<Index>(shape_[a]), d[a] + static_cast<Index>(other.shape_[a]));
      origin[a] = origin_[a] + static_cast<double>(lo) * spacing_;
      shape[a] = static_cast<std::size_t>(hi - lo);
    }
    return GridGeometry(std::move(origin), spacing_, std::move(shape));
  }

  GridGeometry shifted(const CellShift& v) const {
    auto origin = origin_;
    for (std::size_t a = 0; a < dim(); ++a) origin[a] += static_cast<double>(v[a]) * spacing_;
    return GridGeometry(std::move(origin), spacing_, shape_);
  }

  bool same_as(const GridGeometry& other) const {
    if (!aligned_with(other) || shape_ != other.shape_) return false;
    const CellShift d = offset_in(other);
    return d[0] == 0 && d[1] == 0 && d[2] == 0;
  }

 private:
  std::vector<double> origin_;
  double spacing_ = 1.0;
  std::vector<std::size_t> shape_;
};

/// Nonnegative function sampled at cell centers of a uniform grid. Immutable.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(GridGeometry geometry, std::vector<double> values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry_.size()) {
      throw std::invalid_argument("value count " + std::to_string(values_.size()) +
                                  " does not match grid size " + std::to_string(geometry_.size()));
    }
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("grid function values must be finite and nonnegative");
      }
    }
  }

  GridFunction(std::vector<double> origin, double spacing, std::vector<std::size_t> shape,
               std::vector<double> values)
      : GridFunction(GridGeometry(std::move(origin), spacing, std::move(shape)), std::move(values)) {}

  static GridFunction zeros(const GridGeometry& geometry) {
    return GridFunction(geometry, std::vector<double>(geometry.size(), 0.0));
  }

  /// 1-D convenience: values on cells starting at `origin`.
  static GridFunction line(double origin, double spacing, std::vector<double> values) {
    const auto n = values.size();
    return GridFunction({origin}, spacing, {n}, std::move(values));
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t dim() const { return geometry_.dim(); }
  double spacing() const { return geometry_.spacing(); }
  const std::vector<double>& origin() const { return geometry_.origin(); }
  const std::vector<std::size_t>& shape() const { return geometry_.shape(); }
  double cell_volume() const { return geometry_.cell_volume(); }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t flat_index) const { return values_[flat_index]; }

  /// Value at a cell index; zero outside the grid.
  double at(const CellShift& idx) const {
    return geometry_.contains(idx) ? values_[geometry_.flat(idx)] : 0.0;
  }

  double max_value() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
  }

  std::size_t support_count() const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return v > 0.0; }));
  }

  GridFunction with_values(std::vector<double> values) const { return GridFunction(geometry_, std::move(values)); }

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// Strict super-level set {f > t} stored as a cell mask on the function's grid.
class LevelSet {
 public:
  LevelSet() = default;

  LevelSet(GridGeometry geometry, std::vector<std::uint8_t> mask, double threshold = 0.0)
      : geometry_(std::move(geometry)), mask_(std::move(mask)), threshold_(threshold) {
    if (mask_.size() != geometry_.size()) throw std::invalid_argument("mask size does not match grid");
    count_ = static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](auto m) { return m != 0; }));
  }

  /// 1-D set from half-open index intervals.
  static LevelSet from_intervals(const GridGeometry& geometry, const std::vector<Interval>& intervals) {
    if (geometry.dim() != 1) throw std::invalid_argument("from_intervals requires a 1-D grid");
    std::vector<std::uint8_t> mask(geometry.size(), 0);
    for (const auto& iv : intervals) {
      for (Index k = std::max<Index>(iv.lo, 0); k < std::min<Index>(iv.hi, static_cast<Index>(mask.size())); ++k) {
        mask[static_cast<std::size_t>(k)] = 1;
      }
    }
    return LevelSet(geometry, std::move(mask));
  }

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t dim() const { return geometry_.dim(); }
  double threshold() const { return threshold_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  bool contains(std::size_t flat_index) const { return mask_[flat_index] != 0; }
  bool contains(const CellShift& idx) const {
    return geometry_.contains(idx) && mask_[geometry_.flat(idx)] != 0;
  }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  double measure() const { return static_cast<double>(count_) * geometry_.cell_volume(); }

  /// Sorted disjoint maximal runs of set cells (1-D only).
  std::vector<Interval> intervals() const {
    if (dim() != 1) throw std::invalid_argument("intervals() is defined for 1-D level sets");
    std::vector<Interval> out;
    const auto n = static_cast<Index>(mask_.size());
    for (Index k = 0; k < n;) {
      if (!mask_[static_cast<std::size_t>(k)]) {
        ++k;
        continue;
      }
      Index e = k;
      while (e < n && mask_[static_cast<std::size_t>(e)]) ++e;
      out.push_back({k, e});
      k = e;
    }
    return out;
  }

  bool subset_of(const LevelSet& other) const {
    if (!geometry_.same_as(other.geometry_)) throw std::invalid_argument("grid geometry mismatch");
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      if (mask_[i] && !other.mask_[i]) return false;
    }
    return true;
  }

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> mask_;
  double threshold_ = 0.0;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Embedding and alignment
// ---------------------------------------------------------------------------

/// Copies f onto an aligned target grid; throws if f's support leaves the target.
inline GridFunction embed(const GridFunction& f, const GridGeometry& target) {
  const CellShift d = f.geometry().offset_in(target);
  std::vector<double> out(target.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) continue;
    CellShift idx = f.geometry().unflat(i);
    for (std::size_t a = 0; a < f.dim(); ++a) idx[a] += d[a];
    if (!target.contains(idx)) throw std::invalid_argument("support does not fit in the target grid");
    out[target.flat(idx)] = f[i];
  }
  return GridFunction(target, std::move(out));
}

/// Re-expresses f and g on their common aligned grid.
inline std::pair<GridFunction, GridFunction> align(const GridFunction& f, const GridFunction& g) {
  if (f.geometry().same_as(g.geometry())) return {f, g};
  const auto frame = f.geometry().union_with(g.geometry());
  return {embed(f, frame), embed(g, frame)};
}

/// Smallest sub-grid holding the support; a single zero cell for the zero function.
inline GridFunction trim(const GridFunction& f) {
  const auto& geo = f.geometry();
  CellShift lo{0, 0, 0};
  CellShift hi{0, 0, 0};
  bool any = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= 0.0) continue;
    const auto idx = geo.unflat(i);
    for (std::size_t a = 0; a < f.dim(); ++a) {
      lo[a] = any ? std::min(lo[a], idx[a]) : idx[a];
      hi[a] = any ? std::max(hi[a], idx[a]) : idx[a];
    }
    any = true;
  }
  std::vector<double> origin(f.dim());
  std::vector<std::size_t> shape(f.dim());
  for (std::size_t a = 0; a < f.dim(); ++a) {
    origin[a] = geo.origin()[a] + static_cast<double>(lo[a]) * geo.spacing();
    shape[a] = static_cast<std::size_t>(hi[a] - lo[a] + 1);
  }
  GridGeometry target(std::move(origin), geo.spacing(), std::move(shape));
  return embed(f, target);
}

// ---------------------------------------------------------------------------
// Measure-theoretic primitives
// ---------------------------------------------------------------------------

/// Midpoint rule: sum of values times the cell volume (fixed summation order).
inline double integral(const GridFunction& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.cell_volume();
}

/// Integral of |f - g| over the union of two aligned grids.
inline double l1_distance(const GridFunction& f, const GridFunction& g) {
  const auto [a, b] = align(f, g);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * a.cell_volume();
}

inline LevelSet level_set(const GridFunction& f, double t) {
  if (t < 0.0) throw std::invalid_argument("level threshold must be nonnegative");
  std::vector<std::uint8_t> mask(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) mask[i] = f[i] > t ? 1 : 0;
  return LevelSet(f.geometry(), std::move(mask), t);
}

inline LevelSet support(const GridFunction& f) { return level_set(f, 0.0); }

/// Midpoint quadrature of t -> |{f > t}| over [0, max f] with n_heights nodes.
inline double layer_cake_integral(const GridFunction& f, std::size_t n_heights) {
  if (n_heights == 0) throw std::invalid_argument("n_heights must be positive");
  const double top = f.max_value();
  if (top == 0.0) return 0.0;
  std::vector<double> sorted(f.values().begin(), f.values().end());
  std::sort(sorted.begin(), sorted.end());
  const double dt = top / static_cast<double>(n_heights);
  double s = 0.0;
  for (std::size_t k = 0; k < n_heights; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
    s += static_cast<double>(above);
  }
  return s * dt * f.cell_volume();
}

/// Layer cake with breakpoints at the distinct values of f; exact for staircases.
inline double layer_cake_integral_exact(const GridFunction& f) {
  std::vector<double> sorted(f.values().begin(), f.values().end());
  std::sort(sorted.begin(), sorted.end());
  double s = 0.0;
  double previous = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] <= previous) continue;
    // |{f > previous}| = cells from i on.
    s += (sorted[i] - previous) * static_cast<double>(sorted.size() - i);
    previous = sorted[i];
  }
  return s * f.cell_volume();
}

/// x -> f(x - v h): moves the function by whole cells.
inline GridFunction translate(const GridFunction& f, const CellShift& v) {
  return GridFunction(f.geometry().shifted(v), std::vector<double>(f.values().begin(), f.values().end()));
}

inline GridFunction translate(const GridFunction& f, Index v) { return translate(f, CellShift{v, 0, 0}); }

inline GridFunction cap(const GridFunction& f, double c) {
  if (c < 0.0) throw std::invalid_argument("cap level must be nonnegative");
  std::vector<double> out(f.values().begin(), f.values().end());
  for (double& v : out) v = std::min(v, c);
  return f.with_values(std::move(out));
}

inline GridFunction scale(const GridFunction& f, double factor) {
  if (!(factor >= 0.0)) throw std::invalid_argument("scale factor must be nonnegative");
  std::vector<double> out(f.values().begin(), f.values().end());
  for (double& v : out) v *= factor;
  return f.with_values(std::move(out));
}

inline GridFunction normalize(const GridFunction& f) {
  const double mass = integral(f);
  if (!(mass > 0.0)) throw std::invalid_argument("cannot normalize a zero-mass function");
  return scale(f, 1.0 / mass);
}

/// f times the indicator of S.
inline GridFunction restrict_to(const GridFunction& f, const LevelSet& S) {
  if (!f.geometry().same_as(S.geometry())) throw std::invalid_argument("grid geometry mismatch");
  std::vector<double> out(f.values().begin(), f.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!S.contains(i)) out[i] = 0.0;
  }
  return f.with_values(std::move(out));
}

inline GridFunction pointwise_min(const GridFunction& f, const GridFunction& g) {
  const auto [a, b] = align(f, g);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
  return a.with_values(std::move(out));
}

inline GridFunction indicator(const LevelSet& S, double height = 1.0) {
  std::vector<double> out(S.mask().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = S.contains(i) ? height : 0.0;
  return GridFunction(S.geometry(), std::move(out));
}

}  // namespace bbl
