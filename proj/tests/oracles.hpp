// Brute-force reference implementations shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "bbl/grid_function.hpp"

namespace oracle {

inline double lift(double p, double v) {
  if (p > 0) return std::pow(v, p);
  if (p == 0) return std::log(v);
  return -std::pow(v, p);
}

inline double unlift(double p, double z) {
  if (p > 0) return std::pow(std::max(z, 0.0), 1.0 / p);
  if (p == 0) return std::exp(z);
  return std::pow(-z, 1.0 / p);
}

/// 1-D p-concave hull by exhaustive search over supporting p-planes through
/// pairs of lifted support points: at each cell, the best chord spanning it.
inline std::vector<double> hull_1d(const bbl::GridFunction& f, double p) {
  std::vector<std::size_t> pts;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0) pts.push_back(i);
  }
  std::vector<double> out(f.size(), 0.0);
  if (pts.empty()) return out;
  for (std::size_t k = pts.front(); k <= pts.back(); ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto i : pts) {
      for (auto j : pts) {
        if (i > k || j < k) continue;
        const double zi = lift(p, f[i]), zj = lift(p, f[j]);
        const double z = (i == j) ? zi : zi + (zj - zi) * double(k - i) / double(j - i);
        best = std::max(best, z);
      }
    }
    out[k] = unlift(p, best);
  }
  return out;
}

}  // namespace oracle
