#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "barma/diagnostics.hpp"
#include "barma/fit.hpp"
#include "barma/math.hpp"
#include "barma/matrix.hpp"

namespace barma {

/// Type-7 (linear interpolation) quantile of an unsorted sample.
inline double quantile_type7(std::vector<double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0,1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - std::floor(h)) * (x[lo + 1] - x[lo]);
}

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double lower = 0.0;   // equal-tailed interval at the requested level
  double upper = 0.0;
  double ess = kNaN;
  double rhat = kNaN;
};

struct PosteriorSummary {
  double level = 0.95;
  std::vector<ParameterSummary> parameters;
};

/// Pooled posterior summary: means, type-7 equal-tailed intervals, and
/// per-parameter ESS / split R-hat.
inline PosteriorSummary summarize_draws(const std::vector<ChainDraws>& chains, double level = 0.95,
                                        const std::vector<std::string>& names = {}) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("summarize_draws: level must lie in (0,1)");
  const Matrix pooled = pool_draws(chains);
  if (pooled.rows < 10) throw std::invalid_argument("summarize_draws: need at least 10 draws");
  std::vector<EssRhat> diag;
  bool have_diag = true;
  try {
    diag = ess_rhat(chains);
  } catch (const std::invalid_argument&) {
    have_diag = false;
  }

  PosteriorSummary out;
  out.level = level;
  const double a = (1.0 - level) / 2.0;
  for (std::size_t j = 0; j < pooled.cols; ++j) {
    ParameterSummary s;
    s.name = j < names.size() ? names[j] : ("x" + std::to_string(j + 1));
    std::vector<double> col = pooled.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += sqr(v - mean);
    s.mean = mean;
    s.sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
    s.median = quantile_type7(col, 0.5);
    s.lower = quantile_type7(col, a);
    s.upper = quantile_type7(col, 1.0 - a);
    if (have_diag) {
      s.ess = diag[j].ess;
      s.rhat = diag[j].rhat;
    }
    out.parameters.push_back(std::move(s));
  }
  return out;
}

namespace detail {

using Complex = std::complex<double>;

/// Horner evaluation of P(z) = 1 + c1 z + ... + cp z^p and P'(z).
inline std::pair<Complex, Complex> poly_eval(std::span<const double> c, Complex z) {
  Complex p(0.0, 0.0), dp(0.0, 0.0);
  for (std::size_t k = c.size(); k >= 1; --k) {
    dp = dp * z + p;
    p = p * z + c[k - 1];
  }
  dp = dp * z + p;
  p = p * z + 1.0;  // constant term
  return {p, dp};
}

/// Aberth–Ehrlich iteration for all roots of 1 + c1 z + ... + cp z^p.
inline std::vector<Complex> aberth_roots(std::span<const double> c) {
  const std::size_t p = c.size();
  const double radius = std::pow(1.0 / std::abs(c[p - 1]), 1.0 / static_cast<double>(p));
  std::vector<Complex> z(p);
  for (std::size_t k = 0; k < p; ++k) {
    // seeded on the root-product circle; the angular offset breaks the
    // real-axis symmetry that would otherwise trap conjugate pairs
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) /
                             static_cast<double>(p) +
                         0.4;
    z[k] = radius * Complex(std::cos(angle), std::sin(angle));
  }

  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-10;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const auto [pv, dpv] = poly_eval(c, z[i]);
      if (std::abs(pv) == 0.0) continue;
      const Complex newton = pv / dpv;
      Complex repulsion(0.0, 0.0);
      for (std::size_t j = 0; j < p; ++j)
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      const Complex delta = newton / (1.0 - newton * repulsion);
      z[i] -= delta;
      worst = std::max(worst, std::abs(delta));
    }
    if (worst < kTol) return z;
  }
  throw numeric_error("aberth_roots: no convergence after 200 iterations");
}

}  // namespace detail

/// Minimum root modulus of 1 + c1 z + ... + cp z^p. Trailing coefficients
/// below 1e-12 in magnitude are stripped; an empty polynomial has no roots
/// and returns +inf. Degree <= 2 uses the closed form, higher degrees the
/// Aberth–Ehrlich iteration.
inline double min_root_modulus(std::span<const double> coeffs) {
  std::size_t p = coeffs.size();
  while (p > 0 && std::abs(coeffs[p - 1]) < 1e-12) --p;
  if (p == 0) return kPosInf;
  const auto c = coeffs.subspan(0, p);

  if (p == 1) return 1.0 / std::abs(c[0]);
  if (p == 2) {
    const double disc = c[0] * c[0] - 4.0 * c[1];
    if (disc < 0.0) {
      // conjugate pair; |z|^2 = |constant / leading| by Vieta
      return std::sqrt(1.0 / std::abs(c[1]));
    }
    const double s = std::sqrt(disc);
    const double z1 = (-c[0] + s) / (2.0 * c[1]);
    const double z2 = (-c[0] - s) / (2.0 * c[1]);
    return std::min(std::abs(z1), std::abs(z2));
  }

  const auto roots = detail::aberth_roots(c);
  double best = kPosInf;
  for (const auto& z : roots) best = std::min(best, std::abs(z));
  return best;
}

/// Minimum root modulus of the AR characteristic polynomial
/// phi(z) = 1 - phi_1 z - ... - phi_p z^p.
inline double ar_min_root_modulus(std::span<const double> phi) {
  std::vector<double> c(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) c[i] = -phi[i];
  return min_root_modulus(c);
}

/// Minimum root modulus of the MA polynomial theta(z) = 1 + theta_1 z + ...
inline double ma_min_root_modulus(std::span<const double> theta) {
  return min_root_modulus(theta);
}

/// Table of posterior quasi-unit-root probabilities: for each threshold,
/// the fraction of posterior draws whose AR polynomial has a root with
/// modulus below it.
struct RootReport {
  std::vector<double> thresholds;
  std::vector<double> probabilities;
  std::vector<double> min_moduli;  // one entry per pooled draw
};

inline const std::vector<double>& default_root_thresholds() {
  static const std::vector<double> grid{1.01, 1.02, 1.03, 1.04, 1.05};
  return grid;
}

/// Per-draw AR root moduli and threshold probabilities from a matrix
/// whose rows are AR coefficient vectors.
inline RootReport unit_root_probability_from_phi(const Matrix& phi_draws,
                                                 std::span<const double> thresholds) {
  if (phi_draws.rows == 0 || phi_draws.cols == 0)
    throw std::invalid_argument("unit_root_probability: no AR draws");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 1.0))
      throw std::invalid_argument("unit_root_probability: thresholds must be >= 1");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw std::invalid_argument("unit_root_probability: thresholds must be increasing");
  }

  RootReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  report.min_moduli.resize(phi_draws.rows);
  for (std::size_t i = 0; i < phi_draws.rows; ++i)
    report.min_moduli[i] = ar_min_root_modulus(phi_draws.row(i));
  report.probabilities.resize(thresholds.size());
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    std::size_t hits = 0;
    for (double mod : report.min_moduli) hits += mod < thresholds[k] ? 1 : 0;
    report.probabilities[k] =
        static_cast<double>(hits) / static_cast<double>(phi_draws.rows);
  }
  return report;
}

inline RootReport unit_root_probability(const std::vector<ChainDraws>& chains,
                                        const ModelOrder& order,
                                        std::span<const double> thresholds) {
  if (order.p == 0) throw std::invalid_argument("unit_root_probability: model has no AR part");
  const Matrix pooled = pool_draws(chains);
  Matrix phi(pooled.rows, order.p);
  const std::size_t phi_begin = 2 + order.r;
  for (std::size_t i = 0; i < pooled.rows; ++i)
    for (std::size_t j = 0; j < order.p; ++j) phi(i, j) = pooled(i, phi_begin + j);
  return unit_root_probability_from_phi(phi, thresholds);
}

}  // namespace barma
