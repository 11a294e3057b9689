#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "barma/diagnostics.hpp"
#include "barma/fit.hpp"
#include "barma/math.hpp"
#include "barma/parallel.hpp"
#include "barma/posterior.hpp"
#include "barma/sampler.hpp"

namespace barma {

/// Temperature ladder for the stepping-stone estimator. The default
/// schedule t_k = (k/K)^5 concentrates rungs near the prior, where the
/// integrand changes fastest.
struct LadderSpec {
  std::vector<double> temps;           // 0 = t_0 < t_1 < ... < t_K = 1
  std::size_t rung_iterations = 400;   // sampler iterations per rung, warmup included
  double rung_warmup_fraction = 0.5;

  static LadderSpec make(std::size_t rungs = 30, double power = 5.0) {
    if (rungs < 1) throw std::invalid_argument("LadderSpec: need at least one rung");
    LadderSpec ladder;
    ladder.temps.resize(rungs + 1);
    for (std::size_t k = 0; k <= rungs; ++k)
      ladder.temps[k] =
          std::pow(static_cast<double>(k) / static_cast<double>(rungs), power);
    ladder.temps.front() = 0.0;
    ladder.temps.back() = 1.0;
    return ladder;
  }

  void validate() const {
    if (temps.size() < 2 || temps.front() != 0.0 || temps.back() != 1.0)
      throw std::invalid_argument("LadderSpec: temperatures must run from exactly 0 to 1");
    for (std::size_t k = 1; k < temps.size(); ++k)
      if (!(temps[k] > temps[k - 1]))
        throw std::invalid_argument("LadderSpec: temperatures must be strictly increasing");
    if (rung_iterations < 20)
      throw std::invalid_argument("LadderSpec: rung budget too small");
    if (!(rung_warmup_fraction > 0.0 && rung_warmup_fraction < 1.0))
      throw std::invalid_argument("LadderSpec: warmup fraction must lie in (0,1)");
  }
};

namespace detail {

/// Power posterior pi_0(x) * L(x)^temp viewed as a sampling target.
template <class Evaluator>
struct TemperedTarget {
  const Evaluator* evaluator;
  double temp;

  std::size_t dim() const { return evaluator->dim(); }
  double log_density(std::span<const double> x) const { return evaluator->log_density(x, temp); }
  double log_density_grad(std::span<const double> x, std::span<double> grad) const {
    return evaluator->log_density_grad(x, grad, temp);
  }
};

}  // namespace detail

struct SteppingStoneResult {
  double log_ml = kNaN;
  double std_error = kNaN;
  std::vector<double> rung_log_ratio;   // one term per rung
  std::vector<double> rung_variance;    // delta-method variance per rung
};

/// Stepping-stone estimate of the log marginal likelihood.
///
/// A single walker climbs the ladder of power posteriors; each rung
/// re-adapts the step size (the target changes), draws `rung_iterations *
/// (1 - warmup)` samples, and contributes
///   log r_k = log mean_i exp((t_{k+1}-t_k) * loglik(x_i)).
/// The standard error combines per-rung delta-method variances with an
/// ESS correction for autocorrelation in the weights.
///
/// The Evaluator must expose dim(), log_density(x, temp),
/// log_density_grad(x, grad, temp) and log_likelihood_u(x); the prior
/// (temp = 0 target) must be proper.
template <class Evaluator>
SteppingStoneResult stepping_stone_log_ml(const Evaluator& evaluator, const LadderSpec& ladder,
                                          const SamplerConfig& config,
                                          std::span<const double> init_center = {}) {
  ladder.validate();
  const std::size_t rungs = ladder.temps.size() - 1;
  const std::size_t warmup = static_cast<std::size_t>(
      std::llround(ladder.rung_warmup_fraction * ladder.rung_iterations));
  const std::size_t keep = ladder.rung_iterations - warmup;
  if (keep < 10) throw std::invalid_argument("stepping_stone_log_ml: too few draws per rung");

  RngStream rng(config.seed);
  detail::TemperedTarget<Evaluator> prior_target{&evaluator, 0.0};
  PhaseState state =
      detail::initialize_chain(prior_target, center_or(init_center, evaluator.dim()), rng);

  SteppingStoneResult result;
  result.rung_log_ratio.resize(rungs);
  result.rung_variance.resize(rungs);
  double total = 0.0;
  double total_var = 0.0;

  std::vector<double> loglik(keep);
  for (std::size_t k = 0; k < rungs; ++k) {
    const detail::TemperedTarget<Evaluator> target{&evaluator, ladder.temps[k]};
    // the cached density/gradient belong to the previous temperature;
    // prior-rung states can even have zero mass under the next rung, in
    // which case the walker restarts from the init center
    state = PhaseState::make(target, std::move(state.position));
    if (!std::isfinite(state.log_density))
      state = detail::initialize_chain(target, center_or(init_center, evaluator.dim()), rng);
    const double eps0 = find_initial_step_size(target, state, rng);
    DualAveraging da(eps0, config.target_accept);
    for (std::size_t it = 0; it < warmup; ++it) {
      TransitionStats stats;
      state = nuts_transition(target, std::move(state), da.current(), config.max_tree_depth, rng,
                              &stats);
      da.update(stats.accept);
    }
    const double eps = da.adapted();
    if (!(eps >= 1e-10)) throw numeric_error("stepping_stone_log_ml: step size underflow");

    for (std::size_t it = 0; it < keep; ++it) {
      state = nuts_transition(target, std::move(state), eps, config.max_tree_depth, rng);
      loglik[it] = evaluator.log_likelihood_u(state.position);
    }

    const double delta = ladder.temps[k + 1] - ladder.temps[k];
    double top = kNegInf;
    for (double ll : loglik) top = std::max(top, delta * ll);
    if (!std::isfinite(top))
      throw numeric_error("stepping_stone_log_ml: non-finite estimate at rung " +
                          std::to_string(k));
    std::vector<double> weights(keep);
    double mean_w = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
      weights[i] = std::exp(delta * loglik[i] - top);
      mean_w += weights[i];
    }
    mean_w /= static_cast<double>(keep);
    if (!(mean_w > 0.0))
      throw numeric_error("stepping_stone_log_ml: zero weight mass at rung " + std::to_string(k));

    double var_w = 0.0;
    for (double wgt : weights) var_w += sqr(wgt - mean_w);
    var_w /= static_cast<double>(keep > 1 ? keep - 1 : 1);
    double ess = ess_single(weights);
    if (!(ess > 1.0) || !std::isfinite(ess)) ess = static_cast<double>(keep);

    result.rung_log_ratio[k] = top + std::log(mean_w);
    result.rung_variance[k] = var_w / (ess * mean_w * mean_w);
    total += result.rung_log_ratio[k];
    total_var += result.rung_variance[k];
  }

  result.log_ml = total;
  result.std_error = std::sqrt(total_var);
  if (!std::isfinite(result.log_ml))
    throw numeric_error("stepping_stone_log_ml: non-finite log marginal likelihood");
  return result;
}

/// log BF(a,b) = log ML(a) - log ML(b).
inline double log_bayes_factor(double log_ml_a, double log_ml_b) {
  if (!std::isfinite(log_ml_a) || !std::isfinite(log_ml_b))
    throw std::invalid_argument("log_bayes_factor: inputs must be finite");
  return log_ml_a - log_ml_b;
}

struct OrderFit {
  ModelOrder order;
  double log_ml = kNaN;
  double std_error = kNaN;
  bool ok = false;
  std::string error;
};

struct SelectionReport {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<OrderFit> fits;
  std::size_t selected = kNone;  // index into fits, kNone when every fit failed
  std::vector<std::string> warnings;

  bool has_selection() const { return selected != kNone; }
  const OrderFit& best() const {
    if (!has_selection()) throw numeric_error("SelectionReport: no order was fitted successfully");
    return fits[selected];
  }

  /// log BF of grid entry i against grid entry j.
  double log_bf(std::size_t i, std::size_t j) const {
    return log_bayes_factor(fits.at(i).log_ml, fits.at(j).log_ml);
  }
};

/// Rank a list of externally computed log marginal likelihoods.
inline std::size_t select_best(std::span<const double> log_mls) {
  if (log_mls.empty()) throw std::invalid_argument("select_best: empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < log_mls.size(); ++i)
    if (log_mls[i] > log_mls[best]) best = i;
  return best;
}

/// Fit every (p,q) order in the grid, estimate its log marginal
/// likelihood with the stepping-stone, and pick the maximum. Orders run
/// in parallel with seeds split per grid index; per-order failures are
/// recorded and selection happens over the successful fits.
inline SelectionReport order_search(const ObservationSeries& series,
                                    const CovariateMatrix& covariates,
                                    const std::vector<ModelOrder>& grid, const PriorSpec& priors,
                                    const LinkFunction& link, const LadderSpec& ladder,
                                    const SamplerConfig& config) {
  if (grid.empty()) throw std::invalid_argument("order_search: empty order grid");
  priors.validate();

  SelectionReport report;
  report.fits.resize(grid.size());
  bool uses_beta = false, uses_phi = false, uses_theta = false;
  for (const auto& o : grid) {
    uses_beta |= o.r > 0;
    uses_phi |= o.p > 0;
    uses_theta |= o.q > 0;
  }
  const double kWidePrior = 1e4;
  if (priors.sigma2_alpha > kWidePrior || (uses_beta && priors.sigma2_beta > kWidePrior) ||
      (uses_phi && priors.sigma2_phi > kWidePrior) ||
      (uses_theta && priors.sigma2_theta > kWidePrior)) {
    report.warnings.push_back(
        "very wide normal priors in use: Bayes factors are sensitive to the prior width "
        "(Lindley-Bartlett effect); consider moderate variances for model selection");
  }

  RngStream master(config.seed);
  const std::size_t threads = config.threads == 0 ? default_thread_count() : config.threads;
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    OrderFit& fit = report.fits[i];
    fit.order = grid[i];
    try {
      PosteriorEvaluator evaluator(series, covariates, grid[i], priors, link);
      SamplerConfig rung_config = config;
      rung_config.seed = master.derive_seed(0x5e1ec7 + i);
      rung_config.threads = 1;
      const auto center = default_init_center(evaluator);
      const auto ss = stepping_stone_log_ml(evaluator, ladder, rung_config, center);
      fit.log_ml = ss.log_ml;
      fit.std_error = ss.std_error;
      fit.ok = true;
    } catch (const std::exception& e) {
      fit.error = e.what();
    }
  });

  for (std::size_t i = 0; i < report.fits.size(); ++i) {
    const auto& f = report.fits[i];
    if (!f.ok) continue;
    if (!report.has_selection() || f.log_ml > report.fits[report.selected].log_ml)
      report.selected = i;
  }
  return report;
}

}  // namespace barma
