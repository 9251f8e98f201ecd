#pragma once

/**
 * @file means.hpp
 * @brief Weighted power means M_{lambda,p}, the exponent map p -> p/(1+np),
 *        and two scalar inequalities used by the stability certifiers.
 *
 * All functions are pure and thread-safe.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bbl {

/// Exact rational weight a/b with 0 < a < b, gcd(a, b) = 1.
struct Ratio {
  std::int64_t num = 1;
  std::int64_t den = 2;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio&, const Ratio&) = default;

  static Ratio make(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num <= 0 || num >= den) {
      throw std::invalid_argument("ratio must satisfy 0 < num < den");
    }
    const auto g = std::gcd(num, den);
    return Ratio{num / g, den / g};
  }

  /// Recover a/b from a double when some b <= max_den reproduces it to 1e-12.
  static Ratio from_double(double lambda, std::int64_t max_den = 1000) {
    for (std::int64_t den = 2; den <= max_den; ++den) {
      const auto num = static_cast<std::int64_t>(std::llround(lambda * static_cast<double>(den)));
      if (num > 0 && num < den &&
          std::abs(static_cast<double>(num) / static_cast<double>(den) - lambda) <= 1e-12) {
        return make(num, den);
      }
    }
    throw std::invalid_argument("lambda = " + std::to_string(lambda) +
                                " is not commensurate with the grid (no rational a/b with b <= " +
                                std::to_string(max_den) + ")");
  }

  /// Parses "a/b" or a decimal literal.
  static Ratio parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return from_double(std::stod(text));
    return make(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  }
};

/// The pair (lambda, p) together with the ambient dimension n.
///
/// Invariants: 0 < lambda <= 1/2, n >= 1, p > -1/n.
class MeanParams {
 public:
  MeanParams(double lambda, double p, int n = 1) : lambda_(lambda), p_(p), n_(n) {
    if (!(lambda > 0.0 && lambda <= 0.5)) {
      throw std::invalid_argument("lambda must lie in (0, 1/2]");
    }
    if (n < 1) throw std::invalid_argument("dimension n must be positive");
    if (!(p > -1.0 / n) || !std::isfinite(p)) {
      throw std::invalid_argument("p must be finite and exceed -1/n");
    }
  }

  MeanParams(Ratio lambda, double p, int n = 1) : MeanParams(lambda.value(), p, n) {}

  double lambda() const { return lambda_; }
  double p() const { return p_; }
  int n() const { return n_; }

  /// Rational form of lambda, required by the grid sup-convolution.
  Ratio ratio() const { return Ratio::from_double(lambda_); }

 private:
  double lambda_;
  double p_;
  int n_;
};

namespace detail {
inline constexpr double kLogSpaceThreshold = 1e-6;
}

/// M_{lambda,p}(x, y) without range checks on (lambda, p).
///
/// Returns 0 when xy = 0 and x when x == y. For |p| < 1e-6 the mean is
/// evaluated in log space so the family stays continuous through p = 0.
inline double power_mean(double lambda, double p, double x, double y) {
  if (x == 0.0 || y == 0.0) return 0.0;
  if (x == y) return x;
  if (p == 0.0) return std::exp(lambda * std::log(x) + (1.0 - lambda) * std::log(y));
  if (std::isinf(p)) return p > 0 ? std::max(x, y) : std::min(x, y);
  if (std::abs(p) < detail::kLogSpaceThreshold) {
    const double u = p * std::log(x);
    const double w = p * std::log(y);
    const double s = std::log1p(lambda * std::expm1(u) + (1.0 - lambda) * std::expm1(w));
    return std::exp(s / p);
  }
  if (p == 1.0) return lambda * x + (1.0 - lambda) * y;
  return std::pow(lambda * std::pow(x, p) + (1.0 - lambda) * std::pow(y, p), 1.0 / p);
}

inline double p_mean(const MeanParams& params, double x, double y) {
  if (x < 0.0 || y < 0.0) throw std::invalid_argument("p_mean requires nonnegative arguments");
  return power_mean(params.lambda(), params.p(), x, y);
}

/// q = p / (1 + n p); q = 0 at p = 0.
inline double exponent_map(double p, int n) {
  if (n < 1) throw std::invalid_argument("dimension n must be positive");
  if (p == 0.0) return 0.0;
  const double denom = 1.0 + static_cast<double>(n) * p;
  if (!(denom > 0.0)) throw std::invalid_argument("exponent_map requires p > -1/n");
  return p / denom;
}

/// Signed slack of an inequality LHS >= RHS, with its scale.
struct Margin {
  double lhs = 0.0;
  double rhs = 0.0;

  double value() const { return lhs - rhs; }
  double scale() const { return std::max({1.0, std::abs(lhs), std::abs(rhs)}); }
  /// Margin normalized by max(1, |LHS|, |RHS|).
  double relative() const { return value() / scale(); }
  bool holds(double tol = 1e-12) const { return relative() >= -tol; }
};

/// d/dt M_{lambda,p}(t, T(t)) >= 1 / M_{lambda,-p}(1, 1/T'(t)) for p in (-1, 0).
///
/// `Tt` is T(t) and `dTdt` is T'(t). The left side is the analytic derivative.
inline Margin check_holder_derivative(double lambda, double p, double t, double Tt, double dTdt) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (!(p > -1.0 && p < 0.0)) throw std::invalid_argument("p must lie in (-1, 0)");
  if (!(t > 0.0 && Tt > 0.0 && dTdt > 0.0)) {
    throw std::invalid_argument("t, T(t) and T'(t) must be positive");
  }
  const double base = lambda * std::pow(t, p) + (1.0 - lambda) * std::pow(Tt, p);
  const double inner = lambda * std::pow(t, p - 1.0) + (1.0 - lambda) * std::pow(Tt, p - 1.0) * dTdt;
  Margin m;
  m.lhs = inner * std::pow(base, 1.0 / p - 1.0);
  m.rhs = 1.0 / power_mean(lambda, -p, 1.0, 1.0 / dTdt);
  return m;
}

inline Margin check_holder_derivative(const MeanParams& params, double t, double Tt, double dTdt) {
  return check_holder_derivative(params.lambda(), params.p(), t, Tt, dTdt);
}

/// b M_{lambda,p}(u, v) >= M_{lambda,q}(a u, c v) with q = p / (1 + n p),
/// given b^{1/n} >= lambda a^{1/n} + (1 - lambda) c^{1/n}.
///
/// Accepts p in (-1/n, 0); the inequality is guaranteed for p in (-1/(n+2), 0).
inline Margin check_pq_switch(double lambda, double p, int n, double a, double b, double c, double u,
                              double v) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw std::invalid_argument("lambda must lie in (0, 1/2]");
  if (n < 1) throw std::invalid_argument("dimension n must be positive");
  if (!(p < 0.0 && p > -1.0 / n)) throw std::invalid_argument("p must lie in (-1/n, 0)");
  if (!(a > 0.0 && b > 0.0 && c > 0.0 && u > 0.0 && v > 0.0)) {
    throw std::invalid_argument("a, b, c, u, v must be positive");
  }
  const double inv_n = 1.0 / n;
  const double required = lambda * std::pow(a, inv_n) + (1.0 - lambda) * std::pow(c, inv_n);
  if (std::pow(b, inv_n) < required * (1.0 - 1e-14)) {
    throw std::invalid_argument("b^{1/n} must dominate lambda a^{1/n} + (1 - lambda) c^{1/n}");
  }
  const double q = exponent_map(p, n);
  Margin m;
  m.lhs = b * power_mean(lambda, p, u, v);
  m.rhs = power_mean(lambda, q, a * u, c * v);
  return m;
}

}  // namespace bbl
