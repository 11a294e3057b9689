#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

namespace barma {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Conditional means are kept this far away from {0,1} so that the
/// beta log-density arguments stay strictly positive.
inline constexpr double kMuEps = 1e-12;

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients. Relative error < 1e-13
// over the positive reals.
inline constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

inline double lgamma_positive(double x) {
  // valid for x >= 0.5
  double acc = kLanczos[0];
  const double z = x - 1.0;
  for (int i = 1; i < 9; ++i) {
    acc += kLanczos[i] / (z + i);
  }
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

}  // namespace detail

/// log Gamma(x) for x > 0; reflection handles (0, 0.5).
inline double log_gamma(double x) {
  if (!(x > 0.0)) {
    if (std::isnan(x)) return kNaN;
    return kPosInf;  // poles at 0 and the negative integers; callers stay on (0,inf)
  }
  if (x < 0.5) {
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           detail::lgamma_positive(1.0 - x);
  }
  return detail::lgamma_positive(x);
}

/// digamma(x) = d/dx log Gamma(x), x > 0. Upward recurrence shifts the
/// argument above 6, then the asymptotic series in 1/x^2 applies.
inline double digamma(double x) {
  if (!(x > 0.0)) return kNaN;
  double acc = 0.0;
  while (x <= 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number series through 1/x^12.
  const double series =
      1.0 / 12.0 -
      inv2 * (1.0 / 120.0 -
              inv2 * (1.0 / 252.0 -
                      inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0)))));
  return acc + std::log(x) - 0.5 * inv - inv2 * series;
}

/// Numerically stable log(sum(exp(v))).
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double sqr(double x) { return x * x; }

/// log N(x | 0, sigma2)
inline double log_normal_density(double x, double sigma2) {
  return -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * x * x / sigma2;
}

/// log Gamma(x | shape a, rate b), mean a/b
inline double log_gamma_density(double x, double a, double b) {
  if (!(x > 0.0)) return kNegInf;
  return a * std::log(b) - log_gamma(a) + (a - 1.0) * std::log(x) - b * x;
}

/// Raised when an algorithm fails numerically (divergent recursion,
/// non-convergence, adaptation underflow). Distinct from input validation
/// errors so callers can map the two onto different exit codes.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace barma
