#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bbl/hull.hpp"
#include "bbl/supconv.hpp"
#include "oracles.hpp"

using namespace bbl;

namespace {

using oracle::lift;
using oracle::unlift;

/// Exhaustive 2-D hull: best lifted triangle (or segment/point) containing each cell centre.
std::vector<double> oracle_hull_2d(const GridFunction& f, double p) {
  struct P {
    double x, y, z;
  };
  std::vector<P> pts;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= 0) continue;
    const auto c = f.geometry().unflat(i);
    pts.push_back({double(c[0]), double(c[1]), lift(p, f[i])});
  }
  std::vector<double> out(f.size(), 0.0);
  const double eps = 1e-12;
  for (std::size_t cell = 0; cell < f.size(); ++cell) {
    const auto c = f.geometry().unflat(cell);
    const double x = double(c[0]), y = double(c[1]);
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t n = pts.size();
    for (std::size_t a = 0; a < n; ++a) {
      if (pts[a].x == x && pts[a].y == y) best = std::max(best, pts[a].z);
      for (std::size_t b = a + 1; b < n; ++b) {
        // segment
        const double dx = pts[b].x - pts[a].x, dy = pts[b].y - pts[a].y;
        const double cr = dx * (y - pts[a].y) - dy * (x - pts[a].x);
        if (std::abs(cr) < eps) {
          const double t = (dx * (x - pts[a].x) + dy * (y - pts[a].y)) / (dx * dx + dy * dy);
          if (t >= -eps && t <= 1 + eps) best = std::max(best, pts[a].z + t * (pts[b].z - pts[a].z));
        }
        for (std::size_t d = b + 1; d < n; ++d) {
          const double det = (pts[b].x - pts[a].x) * (pts[d].y - pts[a].y) -
                             (pts[d].x - pts[a].x) * (pts[b].y - pts[a].y);
          if (std::abs(det) < eps) continue;
          const double l1 = ((pts[b].x - x) * (pts[d].y - y) - (pts[d].x - x) * (pts[b].y - y)) / det;
          const double l2 = ((pts[d].x - x) * (pts[a].y - y) - (pts[a].x - x) * (pts[d].y - y)) / det;
          const double l3 = 1 - l1 - l2;
          if (l1 < -eps || l2 < -eps || l3 < -eps) continue;
          best = std::max(best, l1 * pts[a].z + l2 * pts[b].z + l3 * pts[d].z);
        }
      }
    }
    if (std::isfinite(best)) out[cell] = unlift(p, best);
  }
  return out;
}

GridFunction random_staircase(std::mt19937_64& rng, std::size_t max_support) {
  const std::size_t n = 4 + rng() % 20;
  std::vector<double> v(n, 0.0);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  const std::size_t k = 1 + rng() % max_support;
  for (std::size_t i = 0; i < k; ++i) v[rng() % n] = u(rng);
  return GridFunction::line(0.25, 0.125, v);
}

void expect_close(const std::vector<double>& a, std::span<const double> b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol * std::max(1.0, a[i])) << "cell " << i;
}

std::vector<double> hat_values(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 - std::abs(2.0 * (i + 0.5) / double(n) - 1.0);
  return v;
}

}  // namespace

TEST(PPlane, Evaluation) {
  EXPECT_EQ(p_plane_eval(PPlane{1.0, {0.0}, 2.0}, {3.7}), 2.0);
  EXPECT_TRUE(std::isinf(p_plane_eval(PPlane{-0.5, {1.0}, -1.0}, {1.0})));
  EXPECT_EQ(p_plane_eval(PPlane{0.0, {0.0}, 0.0}, {5.0}), 1.0);
  EXPECT_EQ(p_plane_eval(PPlane{2.0, {1.0, 1.0}, -5.0}, {1.0, 1.0}), 0.0);
  EXPECT_DOUBLE_EQ(p_plane_eval(PPlane{0.5, {1.0}, 1.0}, {1.0}), 4.0);
  EXPECT_THROW(p_plane_eval(PPlane{1.0, {1.0}, 0.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(PConcaveHull, ConcaveInputIsFixed) {
  const auto f = GridFunction::line(0, 0.01, hat_values(100));
  const auto r = p_concave_hull(f, 1.0);
  EXPECT_NEAR(r.gap_mass, 0.0, 1e-12);
  EXPECT_NEAR(l1_distance(r.hull, f), 0.0, 1e-12);
}

TEST(PConcaveHull, TwoSpikesLogConcave) {
  std::vector<double> v(11, 0.0);
  v[0] = v[10] = 1.0;
  const auto f = GridFunction::line(0, 0.1, v);
  const auto r = p_concave_hull(f, 0.0);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_NEAR(r.hull[i], 1.0, 1e-12);
  EXPECT_NEAR(r.gap_mass, 0.9, 1e-12);
}

TEST(PConcaveHull, MatchesPairOracle1D) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto f = random_staircase(rng, 8);
    for (double p : {-0.25, 0.0, 1.0, 2.0}) {
      const auto r = p_concave_hull(f, p);
      expect_close(oracle::hull_1d(f, p), r.hull.values(), 1e-9);
      EXPECT_NEAR(r.gap_mass, l1_distance(r.hull, f), 1e-12);
    }
  }
}

TEST(PConcaveHull, MatchesTriangleOracle2D) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t nx = 2 + rng() % 6, ny = 2 + rng() % 6;
    std::vector<double> v(nx * ny, 0.0);
    const std::size_t k = 1 + rng() % 9;
    for (std::size_t i = 0; i < k; ++i) v[rng() % v.size()] = u(rng);
    const GridFunction f({0.0, 1.0}, 0.5, {nx, ny}, v);
    for (double p : {-0.25, 0.0, 1.0}) {
      const auto r = p_concave_hull(f, p);
      expect_close(oracle_hull_2d(f, p), r.hull.values(), 1e-9);
    }
  }
}

TEST(PConcaveHull, FacetsSupportTheHull) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto f = random_staircase(rng, 10);
    for (double p : {-0.25, 0.0, 1.0}) {
      const auto r = p_concave_hull(f, p);
      ASSERT_FALSE(r.facets.empty());
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (r.hull[i] <= 0) continue;
        const double x = f.geometry().center(0, static_cast<Index>(i));
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& pl : r.facets) lo = std::min(lo, p_plane_eval(pl, {x}));
        EXPECT_NEAR(lo, r.hull[i], 1e-9 * std::max(1.0, r.hull[i]));
      }
    }
  }
}

TEST(PConcaveHull, ExtensiveIdempotentMonotoneOrdered) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto f = random_staircase(rng, 12);
    std::vector<double> bigger(f.values().begin(), f.values().end());
    for (auto& b : bigger) b *= 1.0 + 0.5 * (rng() % 2);
    const auto f2 = f.with_values(bigger);
    std::vector<GridFunction> hulls;
    for (double p : {-0.25, 0.0, 1.0}) {
      const auto r = p_concave_hull(f, p);
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_GE(r.hull[i], f[i]);
      const auto again = p_concave_hull(r.hull, p);
      EXPECT_LE(again.gap_mass, 1e-12 * std::max(1.0, integral(r.hull)));
      EXPECT_TRUE(is_p_concave(r.hull, p).p_concave);
      const auto r2 = p_concave_hull(f2, p);
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(r.hull[i], r2.hull[i] * (1 + 1e-12));
      hulls.push_back(r.hull);
    }
    for (std::size_t k = 0; k + 1 < hulls.size(); ++k) {
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(hulls[k][i], hulls[k + 1][i] * (1 + 1e-12));
    }
  }
}

TEST(PConcaveHull, Errors) {
  const auto z = GridFunction::line(0, 0.1, {0, 0});
  EXPECT_THROW(p_concave_hull(z, 1.0), std::invalid_argument);
  const auto f = GridFunction::line(0, 0.1, {1, 1});
  EXPECT_THROW(p_concave_hull(f, -1.0), std::invalid_argument);
  const GridFunction f2({0, 0}, 1, {2, 2}, {1, 1, 1, 1});
  EXPECT_THROW(p_concave_hull(f2, -0.5), std::invalid_argument);
  EXPECT_NO_THROW(p_concave_hull(f2, -0.49));
}

TEST(IsPConcave, Examples) {
  const auto ind = GridFunction::line(0, 0.1, std::vector<double>(20, 1.0));
  for (double p : {-0.5, 0.0, 1.0, 5.0}) EXPECT_TRUE(is_p_concave(ind, p).p_concave);
  std::vector<double> v(11, 0.0);
  v[2] = v[8] = 1.0;
  const auto spikes = GridFunction::line(0, 0.1, v);
  const auto chk = is_p_concave(spikes, 0.0);
  EXPECT_FALSE(chk.p_concave);
  EXPECT_NEAR(chk.worst, 1.0, 1e-15);
  EXPECT_EQ(chk.x[0] + chk.y[0], 2 * chk.mid[0]);
  EXPECT_EQ(v[static_cast<std::size_t>(chk.mid[0])], 0.0);
}

TEST(ConvexHullSet, Examples) {
  const GridGeometry geo({0.0}, 0.01, {300});
  const auto I = LevelSet::from_intervals(geo, {{0, 100}});
  EXPECT_EQ(hull_deficit(I), 0.0);
  const auto two = LevelSet::from_intervals(geo, {{0, 100}, {200, 300}});
  EXPECT_EQ(convex_hull_set(two).count(), 300u);
  EXPECT_NEAR(hull_deficit(two), 0.5, 1e-15);
  const auto sep = LevelSet::from_intervals(GridGeometry({0.0}, 0.01, {301}), {{0, 100}, {201, 301}});
  // [0,1] and [2.01,3.01]: the gap has 101 cells.
  EXPECT_NEAR(hull_deficit(sep), 101.0 / 200.0, 1e-15);
  EXPECT_THROW(convex_hull_set(LevelSet::from_intervals(geo, {})), std::invalid_argument);
}

TEST(ConvexHullSet, MatchesPointInTriangleBruteForce) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t nx = 3 + rng() % 8, ny = 3 + rng() % 8;
    std::vector<std::uint8_t> m(nx * ny, 0);
    for (int i = 0; i < 6; ++i) m[rng() % m.size()] = 1;
    const GridGeometry geo({0.0, 0.0}, 1.0, {nx, ny});
    const LevelSet A(geo, m);
    const auto H = convex_hull_set(A);
    std::vector<double> vals(m.begin(), m.end());
    const auto ref = oracle_hull_2d(GridFunction(geo, vals), 1.0);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(H.contains(i), ref[i] > 0) << "cell " << i;
  }
}

TEST(Tail, ConstantsAndProfiles) {
  EXPECT_NEAR(tail_constant(1.0, 1), 0.25, 1e-10);
  EXPECT_NEAR(tail_constant(0.0, 1), 1.0 / (2.0 * std::log(2.0)), 1e-9);
  // n = 2, p = 1: 2 int_1^2 (1 - s/2) s ds = 2/3.
  EXPECT_NEAR(tail_constant(1.0, 2), 2.0 / 3.0, 1e-9);
  EXPECT_GT(tail_constant(-0.25, 1), tail_constant(0.0, 1));
  EXPECT_DOUBLE_EQ(tail_profile(1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(tail_profile(0.0, 2.0), 0.25);
  EXPECT_EQ(tail_profile(1.0, 3.0), 0.0);
}

TEST(Tail, Ratios) {
  const auto ind = GridFunction::line(0, 0.01, std::vector<double>(100, 1.0));
  EXPECT_DOUBLE_EQ(tail_ratio(ind, 0.0).ratio, 1.0);
  const auto hat = GridFunction::line(0, 1e-4, hat_values(10000));
  const auto th = tail_ratio(hat, 1.0);
  EXPECT_NEAR(th.ratio, 0.75, 1e-3);
  EXPECT_TRUE(th.meets_bound());
  EXPECT_TRUE(th.p_concave);
  std::vector<double> ex(2000);
  for (std::size_t i = 0; i < ex.size(); ++i) ex[i] = std::exp(-5.0 * (i + 0.5) / 2000.0);
  const auto te = tail_ratio(GridFunction::line(0, 1.0 / 2000, ex), 0.0);
  EXPECT_TRUE(te.p_concave);
  EXPECT_TRUE(te.meets_bound());
  EXPECT_NEAR(te.bound, 1.0 / (1.0 + 2.0 * tail_constant(0.0, 1)), 1e-12);
  std::vector<double> v(11, 0.0);
  v[2] = v[8] = 1.0;
  EXPECT_FALSE(tail_ratio(GridFunction::line(0, 0.1, v), 0.0).p_concave);
}
