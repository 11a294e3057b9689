#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "barma/dual.hpp"
#include "barma/math.hpp"
#include "barma/model.hpp"

namespace barma {

/// Prior hyper-parameters: Gamma(a,b) on nu (mean a/b), zero-mean
/// normals on the coefficient blocks, and either a normal or a
/// Uniform(-1,1) prior on the intercept.
struct PriorSpec {
  enum class AlphaPrior { normal, uniform };

  double nu_shape = 5.0;
  double nu_rate = 0.1;
  AlphaPrior alpha_prior = AlphaPrior::normal;
  double sigma2_alpha = 20000.0 * 20000.0;
  double sigma2_beta = 20000.0 * 20000.0;
  double sigma2_phi = 20000.0 * 20000.0;
  double sigma2_theta = 20000.0 * 20000.0;

  void validate() const {
    if (!(nu_shape > 0.0) || !(nu_rate > 0.0))
      throw std::domain_error("PriorSpec: gamma hyper-parameters must be positive");
    if (!(sigma2_alpha > 0.0) || !(sigma2_beta > 0.0) || !(sigma2_phi > 0.0) ||
        !(sigma2_theta > 0.0))
      throw std::domain_error("PriorSpec: prior variances must be positive");
  }
};

/// Gamma(a,b) hyper-parameters from a target mean and variance.
inline std::pair<double, double> gamma_prior_from_mean_var(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0))
    throw std::domain_error("gamma_prior_from_mean_var: mean and variance must be positive");
  return {mean * mean / variance, mean / variance};
}

/// Coordinate map used by the sampler: (zeta = log nu, alpha, beta, phi, theta).
inline std::vector<double> to_unconstrained(const ParameterVector& params) {
  std::vector<double> x = params.flatten();
  x[0] = std::log(params.nu);
  return x;
}

inline ParameterVector from_unconstrained(std::span<const double> x, const ModelOrder& order) {
  ParameterVector params = ParameterVector::unflatten(x, order);
  params.nu = std::exp(x[0]);
  return params;
}

namespace detail {

template <class T>
struct PosteriorParts {
  T log_prior{};   // on the unconstrained scale, Jacobian included
  T log_lik{};
  bool prior_finite = true;
  bool lik_finite = true;
};

template <class T>
T log_gamma_density_t(T x, double a, double b) {
  using std::log;
  return a * std::log(b) - barma::log_gamma(a) + (a - 1.0) * log(x) - b * x;
}

template <class T>
T log_normal_density_t(T x, double sigma2) {
  return -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * x * x / sigma2;
}

}  // namespace detail

/// Log partial likelihood: the beta log-density summed over t > max(p,q),
/// conditioning on the first max(p,q) observations. Returns -inf when the
/// mean recursion clamps at a boundary for more than 10% of the summed
/// terms (divergent parameter region).
inline double log_partial_likelihood(const ParameterVector& params,
                                     const ObservationSeries& series,
                                     const CovariateMatrix& covariates, const ModelOrder& order,
                                     const LinkFunction& link) {
  check_dimensions(params, series, covariates, order);
  params.validate();
  std::vector<double> g_y(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) g_y[t] = link.eval(series[t]);

  ParameterVectorT<double> p{params.nu, params.alpha, params.beta, params.phi, params.theta};
  auto work = detail::filter_core<double>(p, g_y, covariates, order, link);
  if (!work.finite)
    throw numeric_error("log_partial_likelihood: non-finite mean recursion");

  const std::size_t m = order.start_index();
  const std::size_t terms = series.size() - m;
  std::size_t clamped = 0;
  double sum = 0.0;
  for (std::size_t t = m; t < series.size(); ++t) {
    const double mu = work.mu[t];
    if (mu <= kMuEps || mu >= 1.0 - kMuEps) ++clamped;
    sum += beta_log_density_t<double>(series[t], mu, params.nu);
  }
  if (clamped > 0.1 * static_cast<double>(terms)) return kNegInf;
  if (!std::isfinite(sum)) return kNegInf;
  return sum;
}

/// Log prior density of the constrained parameter (no Jacobian).
inline double log_prior(const ParameterVector& params, const PriorSpec& priors) {
  priors.validate();
  double lp = log_gamma_density(params.nu, priors.nu_shape, priors.nu_rate);
  if (priors.alpha_prior == PriorSpec::AlphaPrior::uniform) {
    if (std::abs(params.alpha) >= 1.0) return kNegInf;
    lp += std::log(0.5);
  } else {
    lp += log_normal_density(params.alpha, priors.sigma2_alpha);
  }
  for (double b : params.beta) lp += log_normal_density(b, priors.sigma2_beta);
  for (double f : params.phi) lp += log_normal_density(f, priors.sigma2_phi);
  for (double t : params.theta) lp += log_normal_density(t, priors.sigma2_theta);
  return lp;
}

/// Posterior evaluator bound to one data set. Immutable and safe to share
/// across chains. Positions are unconstrained coordinates; the density
/// includes the log-Jacobian of nu = exp(zeta). Gradients are exact,
/// propagated with one dual-number pass per coordinate.
class PosteriorEvaluator {
 public:
  PosteriorEvaluator(ObservationSeries series, CovariateMatrix covariates, ModelOrder order,
                     PriorSpec priors, LinkFunction link = {})
      : series_(std::move(series)),
        covariates_(std::move(covariates)),
        order_(order),
        priors_(priors),
        link_(link) {
    priors_.validate();
    if (order_.r > 0 && covariates_.rows() != series_.size())
      throw std::invalid_argument("PosteriorEvaluator: covariate rows do not match series");
    if (covariates_.cols() != order_.r)
      throw std::invalid_argument("PosteriorEvaluator: covariate columns do not match order r");
    if (series_.size() <= order_.start_index())
      throw std::invalid_argument("PosteriorEvaluator: series shorter than max(p,q)+1");
    g_y_.resize(series_.size());
    for (std::size_t t = 0; t < series_.size(); ++t) g_y_[t] = link_.eval(series_[t]);
  }

  std::size_t dim() const { return order_.dim(); }
  const ModelOrder& order() const { return order_; }
  const PriorSpec& priors() const { return priors_; }
  const LinkFunction& link() const { return link_; }
  const ObservationSeries& series() const { return series_; }
  const CovariateMatrix& covariates() const { return covariates_; }

  /// log prior on the unconstrained scale (Jacobian included).
  double log_prior_u(std::span<const double> x) const {
    auto parts = eval_parts<double>(x, npos);
    return parts.prior_finite ? parts.log_prior : kNegInf;
  }

  /// log partial likelihood at unconstrained coordinates.
  double log_likelihood_u(std::span<const double> x) const {
    auto parts = eval_parts<double>(x, npos);
    return parts.lik_finite ? parts.log_lik : kNegInf;
  }

  /// log posterior kernel: prior + temp * likelihood. temp = 1 is the
  /// posterior; other values give the tempered targets used by the
  /// stepping-stone marginal-likelihood estimator.
  double log_density(std::span<const double> x, double temp = 1.0) const {
    auto parts = eval_parts<double>(x, npos);
    return combine(parts, temp);
  }

  /// Fills grad and returns the density value. A -inf value zeroes the
  /// gradient; the sampler treats such states as divergent.
  double log_density_grad(std::span<const double> x, std::span<double> grad,
                          double temp = 1.0) const {
    if (x.size() != dim() || grad.size() != dim())
      throw std::invalid_argument("PosteriorEvaluator: dimension mismatch");
    double value = 0.0;
    for (std::size_t k = 0; k < dim(); ++k) {
      auto parts = eval_parts<Dual>(x, k);
      const bool finite = parts.prior_finite && (temp == 0.0 || parts.lik_finite);
      if (!finite) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return kNegInf;
      }
      const Dual total = temp == 0.0 ? parts.log_prior : parts.log_prior + temp * parts.log_lik;
      grad[k] = total.d;
      if (k == 0) value = total.v;
    }
    return value;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  double combine(const detail::PosteriorParts<double>& parts, double temp) const {
    if (!parts.prior_finite) return kNegInf;
    if (temp == 0.0) return parts.log_prior;
    if (!parts.lik_finite) return kNegInf;
    return parts.log_prior + temp * parts.log_lik;
  }

  /// Single templated pass: T = double evaluates, T = Dual with
  /// tangent_index k also carries d/dx_k through the whole recursion.
  template <class T>
  detail::PosteriorParts<T> eval_parts(std::span<const double> x, std::size_t tangent_index) const {
    if (x.size() != dim())
      throw std::invalid_argument("PosteriorEvaluator: point dimension mismatch");
    detail::PosteriorParts<T> out;

    auto coord = [&](std::size_t i) {
      if constexpr (std::is_same_v<T, Dual>) {
        return Dual(x[i], i == tangent_index ? 1.0 : 0.0);
      } else {
        return x[i];
      }
    };

    using std::exp;
    const T zeta = coord(0);
    const T nu = exp(zeta);
    ParameterVectorT<T> params;
    params.nu = nu;
    params.alpha = coord(1);
    params.beta.resize(order_.r);
    params.phi.resize(order_.p);
    params.theta.resize(order_.q);
    for (std::size_t j = 0; j < order_.r; ++j) params.beta[j] = coord(2 + j);
    for (std::size_t i = 0; i < order_.p; ++i) params.phi[i] = coord(2 + order_.r + i);
    for (std::size_t j = 0; j < order_.q; ++j)
      params.theta[j] = coord(2 + order_.r + order_.p + j);

    // prior, with the Jacobian of nu = exp(zeta)
    T lp = detail::log_gamma_density_t<T>(nu, priors_.nu_shape, priors_.nu_rate) + zeta;
    if (priors_.alpha_prior == PriorSpec::AlphaPrior::uniform) {
      if (std::abs(value_of(params.alpha)) >= 1.0) {
        out.prior_finite = false;
      } else {
        lp += T(std::log(0.5));
      }
    } else {
      lp += detail::log_normal_density_t<T>(params.alpha, priors_.sigma2_alpha);
    }
    for (std::size_t j = 0; j < order_.r; ++j)
      lp += detail::log_normal_density_t<T>(params.beta[j], priors_.sigma2_beta);
    for (std::size_t i = 0; i < order_.p; ++i)
      lp += detail::log_normal_density_t<T>(params.phi[i], priors_.sigma2_phi);
    for (std::size_t j = 0; j < order_.q; ++j)
      lp += detail::log_normal_density_t<T>(params.theta[j], priors_.sigma2_theta);
    out.log_prior = lp;

    // partial likelihood over the conditioned range
    auto work = detail::filter_core<T>(params, g_y_, covariates_, order_, link_);
    if (!work.finite) {
      out.lik_finite = false;
      return out;
    }
    const std::size_t m = order_.start_index();
    const std::size_t terms = series_.size() - m;
    std::size_t clamped = 0;
    T ll{};
    for (std::size_t t = m; t < series_.size(); ++t) {
      const double mu_val = value_of(work.mu[t]);
      if (mu_val <= kMuEps || mu_val >= 1.0 - kMuEps) ++clamped;
      ll += beta_log_density_t<T>(series_[t], work.mu[t], nu);
    }
    if (clamped > 0.1 * static_cast<double>(terms) || !std::isfinite(value_of(ll)))
      out.lik_finite = false;
    else
      out.log_lik = ll;
    return out;
  }

  ObservationSeries series_;
  CovariateMatrix covariates_;
  ModelOrder order_;
  PriorSpec priors_;
  LinkFunction link_;
  std::vector<double> g_y_;
};

/// log posterior on the unconstrained scale (Eq.-style decomposition:
/// likelihood + prior + Jacobian term zeta).
inline double log_posterior_unconstrained(std::span<const double> x,
                                          const PosteriorEvaluator& evaluator) {
  return evaluator.log_density(x);
}

/// Exact gradient of the unconstrained log posterior.
inline std::vector<double> grad_log_posterior(std::span<const double> x,
                                              const PosteriorEvaluator& evaluator) {
  std::vector<double> grad(evaluator.dim());
  const double value = evaluator.log_density_grad(x, grad);
  if (!std::isfinite(value))
    throw numeric_error("grad_log_posterior: log posterior not finite at point (divergence)");
  for (double g : grad)
    if (!std::isfinite(g))
      throw numeric_error("grad_log_posterior: non-finite gradient (divergence)");
  return grad;
}

}  // namespace barma
