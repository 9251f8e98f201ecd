#pragma once

/**
 * @file gfn_io.hpp
 * @brief Text serialization of grid functions ("GFN1").
 *
 *     gfn <dim> <spacing> <origin_0 .. origin_{dim-1}> <shape_0 .. shape_{dim-1}>
 *     v v v ... (shape_{dim-1} values per line, row-major)
 *
 * Negative, non-finite, missing or surplus values are rejected.
 */

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bbl/grid_function.hpp"

namespace bbl {

class GfnParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline GridFunction read_gfn(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "gfn") throw GfnParseError("missing 'gfn' header");
  int dim = 0;
  double spacing = 0.0;
  if (!(in >> dim >> spacing)) throw GfnParseError("malformed header");
  if (dim < 1 || dim > 3) throw GfnParseError("dimension must be 1, 2 or 3");
  std::vector<double> origin(static_cast<std::size_t>(dim));
  std::vector<std::size_t> shape(static_cast<std::size_t>(dim));
  for (auto& o : origin) {
    if (!(in >> o)) throw GfnParseError("malformed origin");
  }
  for (auto& s : shape) {
    long long n = 0;
    if (!(in >> n) || n < 1) throw GfnParseError("malformed shape");
    s = static_cast<std::size_t>(n);
  }
  GridGeometry geometry = [&] {
    try {
      return GridGeometry(origin, spacing, shape);
    } catch (const std::invalid_argument& e) {
      throw GfnParseError(e.what());
    }
  }();
  std::vector<double> values(geometry.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::string token;
    if (!(in >> token)) throw GfnParseError("expected " + std::to_string(values.size()) + " values, got " + std::to_string(i));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw GfnParseError("bad value '" + token + "'");
    }
    if (used != token.size()) throw GfnParseError("bad value '" + token + "'");
    if (!std::isfinite(v)) throw GfnParseError("non-finite value");
    if (v < 0.0) throw GfnParseError("negative value " + token);
    values[i] = v;
  }
  std::string extra;
  if (in >> extra) throw GfnParseError("trailing data after values");
  return GridFunction(std::move(geometry), std::move(values));
}

inline void write_gfn(std::ostream& out, const GridFunction& f) {
  const auto& geo = f.geometry();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "gfn " << geo.dim() << ' ' << geo.spacing();
  for (double o : geo.origin()) out << ' ' << o;
  for (auto s : geo.shape()) out << ' ' << s;
  out << '\n';
  const std::size_t row = geo.shape().back();
  for (std::size_t i = 0; i < f.size(); ++i) {
    out << f[i];
    out << (((i + 1) % row == 0) ? '\n' : ' ');
  }
}

inline GridFunction load_gfn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GfnParseError("cannot open " + path);
  return read_gfn(in);
}

inline void save_gfn(const std::string& path, const GridFunction& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_gfn(out, f);
}

inline std::string to_gfn_string(const GridFunction& f) {
  std::ostringstream os;
  write_gfn(os, f);
  return os.str();
}

inline GridFunction from_gfn_string(const std::string& text) {
  std::istringstream is(text);
  return read_gfn(is);
}

}  // namespace bbl
