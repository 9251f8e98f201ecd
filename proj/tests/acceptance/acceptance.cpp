// Acceptance run: one PASS/FAIL line per criterion. Tolerances and time limits
// are fixed below; the exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "bbl/bbl.hpp"

using namespace bbl;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

GridFunction random_staircase(std::mt19937_64& rng, std::size_t max_support, double origin, double h) {
  const std::size_t n = 2 + rng() % 30;
  std::vector<double> v(n, 0.0);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  const std::size_t k = 1 + rng() % max_support;
  for (std::size_t i = 0; i < k; ++i) v[rng() % n] = u(rng);
  return GridFunction::line(origin, h, v);
}

const std::vector<Shape> kShapes{Shape::indicator, Shape::hat, Shape::gaussian};
const std::vector<double> kPs{-0.25, 0.0, 1.0};

}  // namespace

int main() {
  // 1. Sharpness slope.
  for (double p : kPs) {
    const std::string name = "sharpness slope p=" + fmt(p);
    run(1, name.c_str(), 120, [p] {
      SweepConfig cfg;
      cfg.family = Family::sharpness;
      cfg.delta0 = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
      cfg.lambda = 0.5;
      cfg.p = p;
      cfg.spacing = 1e-4;
      const auto rows = sweep(cfg);
      bool valid = true;
      for (const auto& r : rows) valid = valid && r.valid();
      const auto fit = fit_symdiff_slope(rows);
      return Outcome{valid && fit.slope >= 0.45 && fit.slope <= 0.55,
                     "slope " + fmt(fit.slope) + " +- " + fmt(fit.stderr_slope) + " in [0.45, 0.55], rows valid " +
                         (valid ? "yes" : "no")};
    });
  }

  // 2. Sharpness deficit value with the generator's h.
  run(2, "sharpness deficit", 1, [] {
    const double spacing = 1e-4;
    const auto t = gen_sharpness_pair(0.01, spacing);
    const auto d = deficit(t.f, t.g, t.h, MeanParams(0.5, 0.0));
    const double expected = (1.1 + 1.0 / 1.1) / 2.0 - 1.0;
    const double err = std::abs(d.delta - expected);
    return Outcome{err <= 2 * spacing && d.pointwise_violations == 0,
                   "delta " + fmt(d.delta) + " vs " + fmt(expected) + " (|err| " + fmt(err) + " <= " +
                       fmt(2 * spacing) + "), violations " + std::to_string(d.pointwise_violations)};
  });

  // 3. Linear regime on dented indicators.
  run(3, "linear regime (dented)", 60, [] {
    const double spacing = 0.0025, c = 0.9;
    const MeanParams mp(0.5, 0.0);
    bool ok = true;
    double worst_ratio = 0, worst_err = 0;
    for (double w : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      const auto f = gen_dented(gen_shape(Shape::indicator, spacing), {Hole{{0.5}, w, 1.0}});
      const auto r = certify_linear(f, std::nullopt, mp, c);
      worst_ratio = std::max(worst_ratio, r.ratio_linear);
      worst_err = std::max(worst_err, std::abs(r.linear_gap - w));
      ok = ok && r.ratio_linear <= 10 && std::abs(r.linear_gap - w) <= 2 * spacing && r.valid();
    }
    return Outcome{ok, "max ratio_linear " + fmt(worst_ratio) + " <= 10, max |gap - w| " + fmt(worst_err) +
                           " <= " + fmt(2 * spacing) + " (c = 0.9)"};
  });

  // 4. Equality collapse.
  run(4, "equality collapse", 30, [] {
    const double spacing = 0.005;
    bool ok = true;
    double worst_delta = 0, worst_main = 0;
    for (auto s : kShapes) {
      const auto f = normalize(gen_shape(s, spacing));
      for (double p : kPs) {
        const MeanParams mp(0.5, p);
        const auto r = certify_main(f, f, sup_convolution(f, f, mp), mp, default_shave_constant(mp));
        worst_delta = std::max(worst_delta, r.delta);
        worst_main = std::max(worst_main, r.main_distance);
        ok = ok && r.delta <= 4 * spacing && r.main_distance <= 8 * spacing * r.mass_f;
      }
    }
    return Outcome{ok, "max delta " + fmt(worst_delta) + " <= " + fmt(4 * spacing) + ", max main_distance " +
                           fmt(worst_main) + " <= " + fmt(8 * spacing)};
  });

  // 5. Two-bump regression.
  run(5, "two-bump regression", 10, [] {
    const double eps = 1e-6, v = 50;
    const auto f = gen_two_bump(eps, v, 0.05);
    const MeanParams mp(0.5, 0.0);
    const double c = default_shave_constant(mp);
    const auto s = shave(f, mp, c);
    const auto r = certify_linear(f, std::nullopt, mp, c);
    const double naive = p_concave_hull(f, 0.0).gap_mass;
    const bool ok = std::abs(s.removed - eps) <= 1e-12 && r.ratio_linear <= 10 && naive > 10 * eps * v;
    return Outcome{ok, "removed " + fmt(s.removed) + " (|err| " + fmt(std::abs(s.removed - eps)) +
                           "), ratio_linear " + fmt(r.ratio_linear) + ", naive hull gap " + fmt(naive) + " > " +
                           fmt(10 * eps * v)};
  });

  // 6. Mean inequality suites.
  run(6, "mean inequalities", 5, [] {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0), pos(0.05, 20.0);
    double worst_h = 1, worst_s = 1, worst_m = 0;
    for (int i = 0; i < 1000; ++i) {
      const double lam = 0.01 + 0.98 * unit(rng);
      const double p = -0.999 * unit(rng) - 1e-6;
      worst_h = std::min(worst_h, check_holder_derivative(lam, p, pos(rng), pos(rng), pos(rng)).relative());
    }
    for (int i = 0; i < 1000; ++i) {
      const int n = 1 + static_cast<int>(rng() % 3);
      const double lam = 0.01 + 0.49 * unit(rng);
      const double p = -(0.999 * unit(rng) + 1e-6) / (n + 2);
      const double a = pos(rng), c = pos(rng);
      const double root = lam * std::pow(a, 1.0 / n) + (1 - lam) * std::pow(c, 1.0 / n);
      const double b = std::pow(root * (1.0 + unit(rng)), n);
      worst_s = std::min(worst_s, check_pq_switch(lam, p, n, a, b, c, pos(rng), pos(rng)).relative());
    }
    for (int i = 0; i < 1000; ++i) {
      const double lam = 0.01 + 0.49 * unit(rng), x = pos(rng), y = pos(rng);
      double p = -0.99 + 5 * unit(rng), q = -0.99 + 5 * unit(rng);
      if (p > q) std::swap(p, q);
      worst_m = std::max(worst_m, power_mean(lam, p, x, y) - power_mean(lam, q, x, y));
    }
    const bool ok = worst_h >= -1e-12 && worst_s >= -1e-12 && worst_m <= 1e-12;
    return Outcome{ok, "min margins " + fmt(worst_h) + " / " + fmt(worst_s) + " >= -1e-12, max M_p - M_q " +
                           fmt(worst_m) + " <= 1e-12"};
  });

  // 7. Hull oracle equivalence.
  run(7, "hull oracle", 30, [] {
    std::mt19937_64 rng(7);
    double worst = 0, worst_idem = 0;
    bool extensive = true;
    for (int rep = 0; rep < 200; ++rep) {
      const auto f = random_staircase(rng, 16, 0.0, 0.1);
      for (double p : kPs) {
        const auto r = p_concave_hull(f, p);
        const auto ref = oracle::hull_1d(f, p);
        for (std::size_t i = 0; i < f.size(); ++i) {
          worst = std::max(worst, std::abs(r.hull[i] - ref[i]) / std::max(1.0, ref[i]));
          extensive = extensive && r.hull[i] >= f[i];
        }
        worst_idem = std::max(worst_idem, p_concave_hull(r.hull, p).gap_mass);
      }
    }
    const bool ok = worst <= 1e-9 && worst_idem <= 1e-12 && extensive;
    return Outcome{ok, "max deviation " + fmt(worst) + " <= 1e-9, idempotence gap " + fmt(worst_idem) +
                           ", extensive " + (extensive ? "yes" : "no")};
  });

  // 8. Transport conservation.
  run(8, "transport conservation", 5, [] {
    std::mt19937_64 rng(8);
    double worst = 0;
    for (int rep = 0; rep < 200; ++rep) {
      auto f = random_staircase(rng, 20, 0.0, 0.05);
      auto g = random_staircase(rng, 20, -0.4, 0.05);
      f = normalize(f);
      g = normalize(g);
      worst = std::max(worst, pushforward_check(spatial_transport(f, g), f, g));
      worst = std::max(worst, pushforward_check(height_transport(f, g), f, g));
    }
    return Outcome{worst <= 1e-12, "max mismatch " + fmt(worst) + " <= 1e-12"};
  });

  // 9. Diagnostics consistency on the equality family.
  run(9, "diagnostics consistency", 60, [] {
    const double spacing = 0.01;
    bool ok = true;
    double worst = 0;
    std::string halving = "yes";
    for (auto s : kShapes) {
      for (double p : kPs) {
        const MeanParams mp(0.5, p);
        std::array<double, 5> prev{};
        for (int level = 0; level < 2; ++level) {
          const double hx = spacing / (1 << level);
          const auto f = normalize(gen_shape(s, hx));
          const auto rep = level_diagnostics(f, f, sup_convolution(f, f, mp), mp, 0.1);
          for (std::size_t k = 0; k < 5; ++k) {
            worst = std::max(worst, rep.masses[k]);
            ok = ok && rep.masses[k] <= 4 * hx * rep.mass_f;
            // Halving the spacing at least halves each mass; exact zeros stay zero.
            if (level == 1 && rep.masses[k] > 0.5 * prev[k] + 1e-12 * rep.mass_f) {
              ok = false;
              halving = "no";
            }
            prev[k] = rep.masses[k];
          }
        }
      }
    }
    return Outcome{ok, "max I-mass " + fmt(worst) + " <= 4 spacing mass, halving " + halving};
  });

  // 10. Equipartition.
  run(10, "cone equipartition", 30, [] {
    const std::size_t n = 61;
    const double h = 0.05;
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double x = (double(i) - 30.0) * h, y = (double(j) - 30.0) * h;
        v[i * n + j] = std::exp(-(x * x + y * y) / (2 * 0.3 * 0.3));
      }
    }
    const GridFunction bump({-30.5 * h, -30.5 * h}, h, {n, n}, v);
    const auto c = cone_equipartition_2d(bump);
    const double off = std::hypot(c.apex[0], c.apex[1]);
    bool ok = c.converged && off <= h;
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.1, 0.5), amp(0.3, 2.0);
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t m = 32;
      std::vector<double> b(m * m, 0.0);
      const int blobs = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < blobs; ++k) {
        const double cx = u(rng), cy = u(rng), s = w(rng), a = amp(rng);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double x = -1.6 + 0.1 * (double(i) + 0.5), y = -1.6 + 0.1 * (double(j) + 0.5);
            const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (s * s);
            if (r2 < 4) b[i * m + j] += a * std::exp(-r2);
          }
        }
      }
      const GridFunction f({-1.6, -1.6}, 0.1, {m, m}, b);
      const auto r = cone_equipartition_2d(f);
      const auto masses = sector_masses(f, Cone2D::regular(), r.apex);
      const double mass = integral(f);
      for (double mi : masses) worst = std::max(worst, std::abs(mi - mass / 3) / mass);
      ok = ok && r.converged;
    }
    ok = ok && worst <= 1e-6;
    return Outcome{ok, "centre offset " + fmt(off) + " <= " + fmt(h) + ", max |sector - mass/3|/mass " +
                           fmt(worst) + " <= 1e-6"};
  });

  // 11. Layer cake.
  run(11, "layer cake", 5, [] {
    std::mt19937_64 rng(11);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const auto f = random_staircase(rng, 30, -0.5, 0.02);
      worst = std::max(worst, std::abs(layer_cake_integral_exact(f) - integral(f)));
    }
    return Outcome{worst <= 1e-12, "max |layer cake - integral| " + fmt(worst) + " <= 1e-12"};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAILED", failures);
  return failures == 0 ? 0 : 1;
}
