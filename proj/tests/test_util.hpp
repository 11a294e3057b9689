#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they are used to check.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

/// Adaptive Simpson quadrature of f over [a,b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 50) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(f, a, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Central finite-difference gradient.
inline std::vector<double> central_fd(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double h = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double up = f(x);
    x[k] = saved - h;
    const double down = f(x);
    x[k] = saved;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Naive transliteration of the beta-ARMA mean recursion, written directly
/// from the systematic-component equation with plain loops. Covariate-free.
struct NaiveFilter {
  std::vector<double> mu;
  std::vector<double> resid;
};

inline NaiveFilter naive_filter_logit(double alpha, const std::vector<double>& phi,
                                      const std::vector<double>& theta,
                                      const std::vector<double>& y) {
  auto logit = [](double v) { return std::log(v / (1.0 - v)); };
  auto inv_logit = [](double eta) {
    double mu = 1.0 / (1.0 + std::exp(-eta));
    if (mu < 1e-12) mu = 1e-12;
    if (mu > 1.0 - 1e-12) mu = 1.0 - 1e-12;
    return mu;
  };
  const std::size_t n = y.size();
  NaiveFilter out;
  out.mu.resize(n);
  out.resid.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    double eta = alpha;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (t >= i + 1) eta += phi[i] * logit(y[t - i - 1]);
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (t >= j + 1) eta += theta[j] * out.resid[t - j - 1];
    }
    out.mu[t] = inv_logit(eta);
    out.resid[t] = logit(y[t]) - eta;
  }
  return out;
}

/// d-dimensional standard normal sampling target.
struct StdNormalTarget {
  std::size_t d = 1;

  std::size_t dim() const { return d; }
  double log_density(std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * s - 0.5 * static_cast<double>(d) * std::log(2.0 * 3.14159265358979323846);
  }
  double log_density_grad(std::span<const double> x, std::span<double> grad) const {
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = -x[i];
    return log_density(x);
  }
};

/// Bivariate normal with unit variances and correlation rho.
struct CorrelatedNormal2 {
  double rho = 0.8;

  std::size_t dim() const { return 2; }
  double log_density(std::span<const double> x) const {
    const double det = 1.0 - rho * rho;
    const double quad = (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / det;
    return -0.5 * quad - std::log(2.0 * 3.14159265358979323846) - 0.5 * std::log(det);
  }
  double log_density_grad(std::span<const double> x, std::span<double> grad) const {
    const double det = 1.0 - rho * rho;
    grad[0] = -(x[0] - rho * x[1]) / det;
    grad[1] = -(x[1] - rho * x[0]) / det;
    return log_density(x);
  }
};

}  // namespace oracle
