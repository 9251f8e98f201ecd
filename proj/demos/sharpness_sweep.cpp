// Near-extremal pairs: the translation distance scales like the square root of
// the deficit. Prints one CSV row per delta0 and the fitted exponent.

#include <iostream>

#include "bbl/lab.hpp"

int main() {
  bbl::SweepConfig cfg;
  cfg.family = bbl::Family::sharpness;
  cfg.delta0 = bbl::parse_delta_grid("1e-4:1e-2:log5");
  cfg.p = 0.0;
  cfg.spacing = 1e-3;
  const auto rows = bbl::sweep(cfg);
  bbl::write_sweep_csv(std::cout, rows);
  const auto fit = bbl::fit_symdiff_slope(rows);
  std::cout << "# symdiff_distance ~ delta^" << fit.slope << " (+- " << fit.stderr_slope << ")\n";
  return 0;
}
