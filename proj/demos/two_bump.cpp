// A unit bump plus a tiny far bump. The hull of f pays for the whole gap
// between the bumps; shaving first removes the far bump and the witness hull
// is then within eps of f.

#include <iostream>

#include "bbl/bbl.hpp"

int main() {
  const double eps = 1e-6;
  const bbl::MeanParams mp(0.5, 0.0);
  for (double v : {10.0, 50.0, 200.0}) {
    const auto f = bbl::gen_two_bump(eps, v, 0.05);
    const double naive = bbl::p_concave_hull(f, 0.0).gap_mass;
    const auto r = bbl::certify_linear(f, std::nullopt, mp, bbl::default_shave_constant(mp));
    std::cout << "v=" << v << "  naive hull gap=" << naive << "  shaved=" << r.shave_removed
              << "  linear_gap=" << r.linear_gap << "  delta=" << r.delta << "\n";
  }
  return 0;
}
