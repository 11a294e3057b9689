#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "barma/analysis.hpp"
#include "barma/matrix.hpp"
#include "barma/model.hpp"
#include "barma/parallel.hpp"
#include "barma/rng.hpp"

namespace barma {

/// Posterior predictive sample: one simulated future path per posterior
/// draw, plus per-horizon point forecasts (predictive means) and
/// equal-tailed intervals.
struct ForecastResult {
  Matrix paths;  // posterior draws x h, values in (0,1)
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
};

/// Per-horizon summary of a predictive sample at the requested level.
inline void forecast_summary(ForecastResult& result, double level) {
  if (result.paths.rows == 0) throw std::invalid_argument("forecast_summary: no draws");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("forecast_summary: level must lie in (0,1)");
  const std::size_t h = result.paths.cols;
  result.level = level;
  result.mean.assign(h, 0.0);
  result.lower.assign(h, 0.0);
  result.upper.assign(h, 0.0);
  const double a = (1.0 - level) / 2.0;
  for (std::size_t k = 0; k < h; ++k) {
    std::vector<double> col = result.paths.column(k);
    double m = 0.0;
    for (double v : col) m += v;
    result.mean[k] = m / static_cast<double>(col.size());
    result.lower[k] = quantile_type7(col, a);
    result.upper[k] = quantile_type7(std::move(col), 1.0 - a);
  }
}

/// Simulate the posterior predictive distribution h steps ahead.
///
/// For each draw the history filter is re-run with that draw's own
/// parameters (the predictive integral is over the joint posterior, so
/// plugged-in point estimates would be wrong), then future values are
/// sampled recursively from the conditional beta. With covariates the
/// future rows must be supplied (deterministic trends or seasonality);
/// path workers use per-draw RNG streams so the result does not depend
/// on the thread count.
inline ForecastResult predictive_draws(const Matrix& draws, const ObservationSeries& history,
                                       const CovariateMatrix& covariates, const ModelOrder& order,
                                       const LinkFunction& link, std::size_t h,
                                       std::uint64_t seed,
                                       const CovariateMatrix& future_covariates = {},
                                       double level = 0.95, std::size_t threads = 0) {
  if (h < 1) throw std::invalid_argument("predictive_draws: horizon must be >= 1");
  if (draws.rows == 0 || draws.cols != order.dim())
    throw std::invalid_argument("predictive_draws: draw matrix does not match model order");
  if (order.r > 0) {
    if (covariates.rows() != history.size() || covariates.cols() != order.r)
      throw std::invalid_argument("predictive_draws: history covariates do not match");
    if (future_covariates.rows() < h || future_covariates.cols() != order.r)
      throw std::invalid_argument(
          "predictive_draws: model has covariates; supply h future covariate rows");
  }

  const std::size_t n = history.size();
  if (n < order.start_index())
    throw std::invalid_argument("predictive_draws: history shorter than max(p,q)");
  std::vector<double> g_y(n);
  for (std::size_t t = 0; t < n; ++t) g_y[t] = link.eval(history[t]);

  ForecastResult result;
  result.paths = Matrix(draws.rows, h);
  RngStream master(seed);

  const std::size_t n_threads = threads == 0 ? default_thread_count() : threads;
  parallel_for(draws.rows, n_threads, [&](std::size_t i) {
    RngStream rng = master.split(i);
    const ParameterVector params = ParameterVector::unflatten(draws.row(i), order);

    ParameterVectorT<double> p{params.nu, params.alpha, params.beta, params.phi, params.theta};
    auto filt = detail::filter_core<double>(p, g_y, covariates, order, link);
    if (!filt.finite)
      throw numeric_error("predictive_draws: non-finite filter pass for a posterior draw");

    // extended sequences: history followed by the simulated future
    std::vector<double> g_all(g_y);
    std::vector<double> resid_all(filt.resid);
    g_all.resize(n + h);
    resid_all.resize(n + h);

    auto xrow = [&](std::size_t t) -> double {
      // x_t' beta for t in the extended time index
      double acc = 0.0;
      for (std::size_t j = 0; j < order.r; ++j) {
        const double x =
            t < n ? covariates(t, j) : future_covariates(t - n, j);
        acc += params.beta[j] * x;
      }
      return acc;
    };

    for (std::size_t k = 0; k < h; ++k) {
      const std::size_t t = n + k;
      double eta = params.alpha;
      if (order.r > 0) eta += xrow(t);
      for (std::size_t i2 = 1; i2 <= order.p; ++i2) {
        double ar_term = g_all[t - i2];
        if (order.r > 0) ar_term -= xrow(t - i2);
        eta += params.phi[i2 - 1] * ar_term;
      }
      for (std::size_t j = 1; j <= order.q; ++j) eta += params.theta[j - 1] * resid_all[t - j];
      if (!std::isfinite(eta))
        throw numeric_error("predictive_draws: non-finite forecast recursion");
      const double mu = link.inverse(eta);
      const double y = draw_beta(mu, params.nu, rng);
      g_all[t] = link.eval(y);
      resid_all[t] = g_all[t] - eta;
      result.paths(i, k) = y;
    }
  });

  forecast_summary(result, level);
  return result;
}

/// Cumulative mean absolute error: entry k averages the absolute errors
/// of horizons 1..k+1.
inline std::vector<double> mae(std::span<const double> forecasts,
                               std::span<const double> actuals) {
  if (forecasts.size() != actuals.size())
    throw std::invalid_argument("mae: forecast and actual lengths differ");
  std::vector<double> out(forecasts.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < forecasts.size(); ++k) {
    acc += std::abs(forecasts[k] - actuals[k]);
    out[k] = acc / static_cast<double>(k + 1);
  }
  return out;
}

/// Per-horizon absolute errors (the non-cumulative reading of the same table).
inline std::vector<double> absolute_errors(std::span<const double> forecasts,
                                           std::span<const double> actuals) {
  if (forecasts.size() != actuals.size())
    throw std::invalid_argument("absolute_errors: forecast and actual lengths differ");
  std::vector<double> out(forecasts.size());
  for (std::size_t k = 0; k < forecasts.size(); ++k)
    out[k] = std::abs(forecasts[k] - actuals[k]);
  return out;
}

}  // namespace barma
