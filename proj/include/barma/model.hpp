#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "barma/dual.hpp"
#include "barma/math.hpp"

namespace barma {

/// Time series constrained to the open unit interval.
class ObservationSeries {
 public:
  explicit ObservationSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("ObservationSeries: series is empty");
    for (std::size_t t = 0; t < values_.size(); ++t) {
      const double y = values_[t];
      if (!(y > 0.0 && y < 1.0)) {
        throw std::domain_error("ObservationSeries: value at index " + std::to_string(t) +
                                " is outside (0,1)");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t t) const { return values_[t]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Row-major n x r covariate block; r = 0 means no covariates.
class CovariateMatrix {
 public:
  CovariateMatrix() = default;
  CovariateMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("CovariateMatrix: data size does not match rows*cols");
    for (double x : data_)
      if (!std::isfinite(x)) throw std::domain_error("CovariateMatrix: non-finite entry");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return cols_ == 0; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Orders of the model: p AR terms, q MA terms, r covariates.
struct ModelOrder {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t r = 0;

  /// Parameter dimension: nu and alpha plus the coefficient blocks.
  std::size_t dim() const { return p + q + r + 2; }
  std::size_t start_index() const { return p > q ? p : q; }
};

/// Full model parameter, flattened as (nu, alpha, beta, phi, theta).
template <class Scalar>
struct ParameterVectorT {
  Scalar nu{};
  Scalar alpha{};
  std::vector<Scalar> beta;
  std::vector<Scalar> phi;
  std::vector<Scalar> theta;
};

struct ParameterVector : ParameterVectorT<double> {
  ParameterVector() = default;
  ParameterVector(double nu_, double alpha_, std::vector<double> beta_, std::vector<double> phi_,
                  std::vector<double> theta_) {
    nu = nu_;
    alpha = alpha_;
    beta = std::move(beta_);
    phi = std::move(phi_);
    theta = std::move(theta_);
  }

  ModelOrder order() const { return {phi.size(), theta.size(), beta.size()}; }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(2 + beta.size() + phi.size() + theta.size());
    out.push_back(nu);
    out.push_back(alpha);
    out.insert(out.end(), beta.begin(), beta.end());
    out.insert(out.end(), phi.begin(), phi.end());
    out.insert(out.end(), theta.begin(), theta.end());
    return out;
  }

  static ParameterVector unflatten(std::span<const double> x, const ModelOrder& order) {
    if (x.size() != order.dim())
      throw std::invalid_argument("ParameterVector: flat vector does not match order dimension");
    ParameterVector out;
    out.nu = x[0];
    out.alpha = x[1];
    out.beta.assign(x.begin() + 2, x.begin() + 2 + order.r);
    out.phi.assign(x.begin() + 2 + order.r, x.begin() + 2 + order.r + order.p);
    out.theta.assign(x.begin() + 2 + order.r + order.p, x.end());
    return out;
  }

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu))
      throw std::domain_error("ParameterVector: nu must be positive and finite");
    for (double v : flatten())
      if (!std::isfinite(v)) throw std::domain_error("ParameterVector: non-finite entry");
  }
};

/// Names in flattening order, for summaries and CSV headers.
inline std::vector<std::string> parameter_names(const ModelOrder& order) {
  std::vector<std::string> names{"nu", "alpha"};
  for (std::size_t j = 0; j < order.r; ++j) names.push_back("beta" + std::to_string(j + 1));
  for (std::size_t i = 0; i < order.p; ++i) names.push_back("phi" + std::to_string(i + 1));
  for (std::size_t j = 0; j < order.q; ++j) names.push_back("theta" + std::to_string(j + 1));
  return names;
}

enum class LinkKind { logit, cloglog };

inline LinkKind link_from_string(const std::string& s) {
  if (s == "logit") return LinkKind::logit;
  if (s == "cloglog") return LinkKind::cloglog;
  throw std::invalid_argument("unknown link '" + s + "' (expected logit or cloglog)");
}

inline const char* to_string(LinkKind k) { return k == LinkKind::logit ? "logit" : "cloglog"; }

namespace detail {

// logistic with overflow-safe branches
template <class T>
T logistic(T eta) {
  using std::exp;
  if (value_of(eta) >= 0.0) {
    const T e = exp(-eta);
    return 1.0 / (1.0 + e);
  }
  const T e = exp(eta);
  return e / (1.0 + e);
}

template <class T>
T clamp_unit(T mu) {
  if (value_of(mu) < kMuEps) return T(kMuEps);
  if (value_of(mu) > 1.0 - kMuEps) return T(1.0 - kMuEps);
  return mu;
}

}  // namespace detail

/// Strictly monotone map (0,1) -> R together with its inverse and
/// derivative. The templated members accept dual scalars so the filter
/// recursion can be differentiated without code duplication.
struct LinkFunction {
  LinkKind kind = LinkKind::logit;

  template <class T>
  T eval(T x) const {
    using std::log;
    if (kind == LinkKind::logit) return log(x / (1.0 - x));
    return log(-log(1.0 - x));
  }

  /// g^{-1}(eta), clamped into [kMuEps, 1-kMuEps].
  template <class T>
  T inverse(T eta) const {
    using std::exp;
    if (kind == LinkKind::logit) return detail::clamp_unit(detail::logistic(eta));
    return detail::clamp_unit(1.0 - exp(-exp(eta)));
  }

  double deriv(double x) const {
    if (kind == LinkKind::logit) return 1.0 / (x * (1.0 - x));
    return -1.0 / ((1.0 - x) * std::log(1.0 - x));
  }
};

/// g(x) with domain checking.
inline double link_eval(const LinkFunction& link, double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("link_eval: argument must lie in (0,1)");
  return link.eval(x);
}

/// g^{-1}(eta), clamped into [1e-12, 1-1e-12].
inline double link_inverse(const LinkFunction& link, double eta) {
  if (!std::isfinite(eta)) throw std::domain_error("link_inverse: argument must be finite");
  return link.inverse(eta);
}

/// Beta log-density in the mean/precision parameterization:
///   log Gamma(nu) - log Gamma(nu mu) - log Gamma(nu (1-mu))
///   + (nu mu - 1) log y + (nu (1-mu) - 1) log(1-y).
template <class T>
T beta_log_density_t(double y, T mu, T nu) {
  using std::log;
  const T a = nu * mu;
  const T b = nu * (1.0 - mu);
  return log_gamma(nu) - log_gamma(a) - log_gamma(b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

inline double beta_log_density(double y, double mu, double nu) {
  if (!(y > 0.0 && y < 1.0)) throw std::domain_error("beta_log_density: y must lie in (0,1)");
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("beta_log_density: mu must lie in (0,1)");
  if (!(nu > 0.0)) throw std::domain_error("beta_log_density: nu must be positive");
  return beta_log_density_t<double>(y, mu, nu);
}

/// Var(Y_t | F_{t-1}) = mu (1-mu) / (1+nu).
inline double conditional_variance(double mu, double nu) {
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("conditional_variance: mu must lie in (0,1)");
  if (!(nu > 0.0)) throw std::domain_error("conditional_variance: nu must be positive");
  return mu * (1.0 - mu) / (1.0 + nu);
}

/// Conditional means and link-scale errors produced by the mean recursion.
struct FilterOutput {
  std::vector<double> mu;
  std::vector<double> resid;     // r_t = g(y_t) - g(mu_t)
  std::size_t start_index = 0;   // max(p,q): first fully conditioned term
  std::size_t clamp_count = 0;   // times mu hit the [eps, 1-eps] clamp
};

namespace detail {

template <class Scalar>
struct FilterWork {
  std::vector<Scalar> eta;
  std::vector<Scalar> mu;
  std::vector<Scalar> resid;
  std::size_t clamp_count = 0;
  bool finite = true;
};

/// Mean recursion on the link scale:
///   g(mu_t) = alpha + x_t'beta + sum_i phi_i (g(y_{t-i}) - x_{t-i}'beta)
///           + sum_j theta_j r_{t-j}
/// Pre-sample AR and MA terms are zero; r_t := g(y_t) - g(mu_t).
template <class Scalar>
FilterWork<Scalar> filter_core(const ParameterVectorT<Scalar>& params,
                               std::span<const double> g_y, const CovariateMatrix& covariates,
                               const ModelOrder& order, const LinkFunction& link) {
  const std::size_t n = g_y.size();
  FilterWork<Scalar> work;
  work.eta.resize(n);
  work.mu.resize(n);
  work.resid.resize(n);

  std::vector<Scalar> xb;
  if (order.r > 0) {
    xb.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      Scalar acc{};
      for (std::size_t j = 0; j < order.r; ++j) acc += params.beta[j] * covariates(t, j);
      xb[t] = acc;
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    Scalar eta = params.alpha;
    if (order.r > 0) eta += xb[t];
    for (std::size_t i = 1; i <= order.p; ++i) {
      if (t >= i) {
        Scalar ar_term = Scalar(g_y[t - i]);
        if (order.r > 0) ar_term -= xb[t - i];
        eta += params.phi[i - 1] * ar_term;
      }
    }
    for (std::size_t j = 1; j <= order.q; ++j) {
      if (t >= j) eta += params.theta[j - 1] * work.resid[t - j];
    }
    const double ev = value_of(eta);
    if (!std::isfinite(ev)) {
      work.finite = false;
      return work;
    }
    Scalar mu = link.inverse(eta);
    if (value_of(mu) <= kMuEps || value_of(mu) >= 1.0 - kMuEps) ++work.clamp_count;
    work.eta[t] = eta;
    work.mu[t] = mu;
    work.resid[t] = Scalar(g_y[t]) - eta;
  }
  return work;
}

}  // namespace detail

inline void check_dimensions(const ParameterVector& params, const ObservationSeries& series,
                             const CovariateMatrix& covariates, const ModelOrder& order) {
  if (params.phi.size() != order.p || params.theta.size() != order.q ||
      params.beta.size() != order.r)
    throw std::invalid_argument("filter_recursion: parameter blocks do not match model order");
  if (order.r > 0 && covariates.rows() != series.size())
    throw std::invalid_argument("filter_recursion: covariate rows do not match series length");
  if (order.r > 0 && covariates.cols() != order.r)
    throw std::invalid_argument("filter_recursion: covariate columns do not match order r");
}

/// Run the mean recursion over an observed series.
inline FilterOutput filter_recursion(const ParameterVector& params, const ObservationSeries& series,
                                     const CovariateMatrix& covariates, const ModelOrder& order,
                                     const LinkFunction& link) {
  check_dimensions(params, series, covariates, order);
  params.validate();

  std::vector<double> g_y(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) g_y[t] = link.eval(series[t]);

  ParameterVectorT<double> p{params.nu, params.alpha, params.beta, params.phi, params.theta};
  auto work = detail::filter_core<double>(p, g_y, covariates, order, link);
  if (!work.finite)
    throw numeric_error("filter_recursion: non-finite mean recursion (divergent parameters)");

  FilterOutput out;
  out.mu = std::move(work.mu);
  out.resid = std::move(work.resid);
  out.start_index = order.start_index();
  out.clamp_count = work.clamp_count;
  return out;
}

/// omega = alpha / (1 - sum(phi)), the location the linearized recursion
/// reverts to on the link scale.
inline double long_run_location(double alpha, std::span<const double> phi) {
  double phi_at_one = 1.0;
  for (double p : phi) phi_at_one -= p;
  if (std::abs(phi_at_one) < 1e-12)
    throw numeric_error("long_run_location: AR polynomial vanishes at 1 (unit root)");
  return alpha / phi_at_one;
}

}  // namespace barma
