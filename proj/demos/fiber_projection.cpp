// Collapses a 3-D function on the cone {x3 <= x1} along x3 and checks the
// projected inequality with the switched exponent q = p / (1 + p).

#include <iostream>

#include "bbl/bbl.hpp"

int main() {
  const std::size_t n = 16;
  const double h = 1.0 / static_cast<double>(n);
  const bbl::GridGeometry geo({0.0, 0.0, 0.0}, h, {n, n, n});
  std::vector<std::uint8_t> mask(geo.size(), 0);
  for (std::size_t k = 0; k < geo.size(); ++k) {
    const auto c = geo.unflat(k);
    mask[k] = c[2] <= c[0];
  }
  const bbl::LevelSet cone(geo, mask);
  auto constant_on_cone = [&](double a) {
    std::vector<double> v(geo.size(), 0.0);
    for (std::size_t k = 0; k < geo.size(); ++k) v[k] = mask[k] ? a : 0.0;
    return bbl::GridFunction(geo, v);
  };

  const double p = -0.2;
  const auto f = constant_on_cone(1.0);
  const auto g = constant_on_cone(3.0);
  const auto hh = constant_on_cone(bbl::power_mean(0.5, p, 1.0, 3.0));
  const auto F = bbl::fiber_project(f, cone);
  const auto G = bbl::fiber_project(g, cone);
  const auto H = bbl::fiber_project(hh, cone);
  std::cout << "integral f = " << bbl::integral(f) << ", integral F = " << bbl::integral(F) << "\n";
  const auto chk = bbl::check_projected_hypothesis(F, G, H, 0.5, p);
  std::cout << "q = " << chk.q << ", worst relative margin = " << chk.worst_margin
            << ", violating pairs = " << chk.violations.total << "\n";
  return chk.violations.holds() ? 0 : 1;
}
