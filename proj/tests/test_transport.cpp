#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bbl/supconv.hpp"
#include "bbl/transport.hpp"

using namespace bbl;

namespace {

GridFunction random_pair_member(std::mt19937_64& rng, double origin) {
  const std::size_t n = 3 + rng() % 30;
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = rng() % 4 == 0 ? 0.0 : u(rng);
  v[rng() % n] = u(rng);
  return normalize(GridFunction::line(origin, 0.05, v));
}

/// Independent cumulative of a 1-D staircase at position x.
double cdf(const GridFunction& f, double x) {
  double s = 0;
  const double h = f.spacing();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double lo = f.origin()[0] + double(i) * h;
    s += f[i] * std::clamp(x - lo, 0.0, h);
  }
  return s;
}

std::vector<double> hat(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 - std::abs(2.0 * (i + 0.5) / double(n) - 1.0);
  return v;
}

}  // namespace

TEST(SpatialTransport, IdentityAndHalving) {
  const auto f = GridFunction::line(0, 0.01, std::vector<double>(100, 1.0));
  const auto Tid = spatial_transport(f, f);
  for (double x : {0.0, 0.123, 0.5, 0.999, 1.0}) EXPECT_NEAR(Tid(x), x, 1e-14);
  const auto g = GridFunction::line(0, 0.01, std::vector<double>(50, 2.0));
  const auto T = spatial_transport(f, g);
  for (double x : {0.0, 0.1, 0.37, 0.9, 1.0}) {
    EXPECT_NEAR(T(x), x / 2, 1e-14);
    if (x > 0) {
      EXPECT_NEAR(T.derivative(x), 0.5, 1e-12);
    }
  }
  EXPECT_LE(pushforward_check(T, f, g), 1e-12);
}

TEST(SpatialTransport, JumpsAcrossGaps) {
  const auto f = GridFunction::line(0, 0.25, {1, 1, 1, 1});
  const auto g = GridFunction::line(0, 0.25, {2, 0, 0, 2});
  const auto T = spatial_transport(f, g);
  EXPECT_NEAR(T(0.25), 0.125, 1e-14);
  // Half the mass is reached at x = 0.5; the gap (0.25, 0.75) of g is jumped.
  EXPECT_NEAR(T(0.5), 0.25, 1e-14);
  EXPECT_NEAR(T(0.5 + 1e-9), 0.75, 1e-8);
  EXPECT_LE(pushforward_check(T, f, g), 1e-12);
}

TEST(HeightTransport, IdentityAndDoubling) {
  const auto f = GridFunction::line(0, 0.01, std::vector<double>(100, 1.0));
  const auto Tid = height_transport(f, f);
  for (double t : {0.0, 0.3, 0.7, 1.0}) EXPECT_NEAR(Tid(t), t, 1e-14);
  const auto g = GridFunction::line(0, 0.01, std::vector<double>(50, 2.0));
  const auto T = height_transport(f, g);
  for (double t : {0.0, 0.3, 0.5, 1.0}) EXPECT_NEAR(T(t), 2 * t, 1e-14);
  EXPECT_NEAR(T.derivative(0.4), 2.0, 1e-12);
}

TEST(Transport, RandomPairsConserveMass) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto f = random_pair_member(rng, 0.0);
    const auto g = random_pair_member(rng, -0.35);
    EXPECT_LE(pushforward_check(spatial_transport(f, g), f, g), 1e-12);
    EXPECT_LE(pushforward_check(height_transport(f, g), f, g), 1e-12);
  }
}

TEST(Transport, CumulativeMatchesIndependentCdf) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto f = random_pair_member(rng, 0.1);
    const auto g = random_pair_member(rng, 0.0);
    const auto T = spatial_transport(f, g);
    for (int k = 0; k <= 40; ++k) {
      const double x = f.origin()[0] + f.spacing() * double(f.size()) * k / 40.0;
      EXPECT_NEAR(cdf(f, x), cdf(g, T(x)), 1e-12);
    }
  }
}

TEST(Transport, IdentityMapMeasuresCdfGap) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto f = random_pair_member(rng, 0.0);
    const auto g = random_pair_member(rng, 0.0);
    const double hi = 0.05 * double(std::max(f.size(), g.size()));
    const auto id = TransportMap1D::identity(0.0, hi);
    double gap = 0;
    for (std::size_t k = 0; k <= std::max(f.size(), g.size()); ++k) {
      const double x = 0.05 * double(k);
      gap = std::max(gap, std::abs(cdf(f, x) - cdf(g, x)));
    }
    EXPECT_NEAR(pushforward_check(id, f, g), gap, 1e-12);
  }
}

TEST(Transport, ZeroFunctionsGiveZeroMismatch) {
  const auto z = GridFunction::line(0, 0.1, {0, 0, 0});
  EXPECT_EQ(pushforward_check(TransportMap1D::identity(0, 0.3), z, z), 0.0);
}

TEST(Transport, CompositionIsIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    // Strictly positive densities, so both maps are bijections on the supports.
    std::vector<double> a(5 + rng() % 10), b(5 + rng() % 10);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const auto f = normalize(GridFunction::line(0, 0.1, a));
    const auto g = normalize(GridFunction::line(1, 0.1, b));
    const auto Tfg = spatial_transport(f, g);
    const auto Tgf = spatial_transport(g, f);
    for (int k = 0; k <= 20; ++k) {
      const double y = 1.0 + 0.1 * double(b.size()) * k / 20.0;
      EXPECT_NEAR(Tfg(Tgf(y)), y, 1e-9);
    }
    const auto Hfg = height_transport(f, g);
    const auto Hgf = height_transport(g, f);
    for (int k = 1; k < 20; ++k) {
      const double s = g.max_value() * k / 20.0;
      EXPECT_NEAR(Hfg(Hgf(s)), s, 1e-9);
    }
  }
}

TEST(Transport, MassMismatchRejected) {
  const auto f = GridFunction::line(0, 0.1, {1, 1});
  const auto g = GridFunction::line(0, 0.1, {1, 2});
  EXPECT_THROW(spatial_transport(f, g), std::invalid_argument);
  EXPECT_THROW(height_transport(f, g), std::invalid_argument);
  const auto z = GridFunction::line(0, 0.1, {0, 0});
  EXPECT_THROW(spatial_transport(z, z), std::invalid_argument);
}

TEST(SymmetricDifference, TranslatesAndOverlaps) {
  const GridGeometry geo({0.0}, 0.1, {40});
  const auto A = LevelSet::from_intervals(geo, {{0, 10}});
  const auto B = LevelSet::from_intervals(geo, {{25, 35}});
  EXPECT_NEAR(min_translate_symmetric_difference(A, B), 0.0, 1e-12);
  const auto C = LevelSet::from_intervals(geo, {{20, 26}});
  EXPECT_NEAR(min_translate_symmetric_difference(A, C), 0.4, 1e-12);
  const auto D = LevelSet::from_intervals(geo, {{0, 3}, {7, 10}});
  // Best real shift aligns one piece of D inside A: |A| - |D| = 0.4.
  EXPECT_NEAR(min_translate_symmetric_difference(A, D), 0.4, 1e-12);
}

TEST(Diagnostics, EqualityCaseIsClean) {
  const auto f = normalize(GridFunction::line(0, 0.01, hat(100)));
  for (double p : {-0.25, 0.0, 1.0}) {
    const MeanParams mp(0.5, p);
    const auto rep = level_diagnostics(f, f, sup_convolution(f, f, mp), mp, 0.1);
    for (double m : rep.masses) EXPECT_LE(m, 4 * 0.01 * integral(f));
    EXPECT_NEAR(rep.mass_f, 1.0, 1e-12);
  }
}

TEST(Diagnostics, HoleShowsUpInI2) {
  std::vector<double> v(100, 1.0);
  for (std::size_t i = 45; i < 55; ++i) v[i] = 0.0;
  const auto f = GridFunction::line(0, 0.01, v);
  const MeanParams mp(0.5, 0.0);
  const auto rep = level_diagnostics(f, f, sup_convolution(f, f, mp), mp, 0.1);
  EXPECT_GE(rep.masses[1], 0.1 * 1.0);
  for (double m : rep.masses) EXPECT_LE(m, integral(f) + 1e-12);
}

TEST(Diagnostics, TranslatesPassI4I5) {
  const auto f = normalize(GridFunction::line(0, 0.01, hat(80)));
  const auto g = translate(f, 13);
  const MeanParams mp(0.5, 0.0);
  const auto rep = level_diagnostics(f, g, sup_convolution(f, g, mp), mp, 0.1);
  EXPECT_LE(rep.masses[3], 4 * 0.01);
  EXPECT_LE(rep.masses[4], 4 * 0.01);
}

TEST(Diagnostics, Errors) {
  const auto f = GridFunction::line(0, 0.1, {1, 1});
  const auto g = GridFunction::line(0, 0.1, {1, 2});
  const MeanParams mp(0.5, 0.0);
  EXPECT_THROW(level_diagnostics(f, f, f, mp, 0.0), std::invalid_argument);
  EXPECT_THROW(level_diagnostics(f, f, f, mp, 1.0), std::invalid_argument);
  EXPECT_THROW(level_diagnostics(f, g, g, mp, 0.1), std::invalid_argument);
}
