// Finds the apex splitting a two-blob density into three equal sector masses,
// for the 120 degree cones and for the quadrant-style cones.

#include <cmath>
#include <iostream>

#include "bbl/bbl.hpp"

int main() {
  const std::size_t n = 40;
  const double h = 0.1;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (static_cast<double>(i) + 0.5) * h - 2.0;
      const double y = (static_cast<double>(j) + 0.5) * h - 2.0;
      v[i * n + j] = std::exp(-((x + 0.7) * (x + 0.7) + y * y) / 0.2) +
                     0.5 * std::exp(-((x - 0.8) * (x - 0.8) + (y - 0.6) * (y - 0.6)) / 0.1);
    }
  }
  const bbl::GridFunction f({-2.0, -2.0}, h, {n, n}, v);
  for (const auto& [name, cone] : {std::pair{"regular", bbl::Cone2D::regular()},
                                   std::pair{"quadrant", bbl::Cone2D::quadrant()}}) {
    const auto r = bbl::cone_equipartition_2d(f, cone);
    std::cout << name << ": apex (" << r.apex[0] << ", " << r.apex[1] << ") masses " << r.masses[0] << " "
              << r.masses[1] << " " << r.masses[2] << " residual " << r.residual << "\n";
    if (!r.converged) return 1;
  }
  return 0;
}
