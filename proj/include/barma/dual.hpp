#pragma once

#include <cmath>

#include "barma/math.hpp"

namespace barma {

/// First-order dual number: value plus one directional derivative.
/// The posterior gradient is assembled from one propagation pass per
/// coordinate, which keeps the arithmetic allocation-free.
struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // tangent

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}
  constexpr Dual(double value, double tangent) : v(value), d(tangent) {}
};

constexpr Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
constexpr Dual operator-(Dual a) { return {-a.v, -a.d}; }
constexpr Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
constexpr Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

constexpr Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }
constexpr Dual operator+(double a, Dual b) { return {a + b.v, b.d}; }
constexpr Dual operator-(Dual a, double b) { return {a.v - b, a.d}; }
constexpr Dual operator-(double a, Dual b) { return {a - b.v, -b.d}; }
constexpr Dual operator*(Dual a, double b) { return {a.v * b, a.d * b}; }
constexpr Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
constexpr Dual operator/(Dual a, double b) { return {a.v / b, a.d / b}; }
constexpr Dual operator/(double a, Dual b) { return {a / b.v, -a * b.d / (b.v * b.v)}; }

inline Dual& operator+=(Dual& a, Dual b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, Dual b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, Dual b) { a = a * b; return a; }

constexpr bool operator<(Dual a, double b) { return a.v < b; }
constexpr bool operator>(Dual a, double b) { return a.v > b; }

inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }

inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

inline Dual log_gamma(Dual a) {
  // tangent-free arguments skip the digamma evaluation
  if (a.d == 0.0) return {log_gamma(a.v), 0.0};
  return {log_gamma(a.v), digamma(a.v) * a.d};
}

// accessors used by code templated over double / Dual
constexpr double value_of(double x) { return x; }
constexpr double value_of(Dual x) { return x.v; }

}  // namespace barma
