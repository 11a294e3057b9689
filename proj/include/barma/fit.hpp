#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "barma/posterior.hpp"
#include "barma/sampler.hpp"

namespace barma {

/// Posterior sample of a beta-ARMA model, draws on the constrained scale
/// (the nu column is back-transformed from zeta = log nu).
struct BarmaFit {
  std::vector<ChainDraws> chains;
  std::vector<std::string> names;
  std::vector<std::string> chain_failures;
  ModelOrder order;
};

/// Default chain starting center: zeta at the log prior mean of nu, all
/// other coordinates at zero. run_chains adds Uniform(-0.5,0.5) jitter.
inline std::vector<double> default_init_center(const PosteriorEvaluator& evaluator) {
  std::vector<double> center(evaluator.dim(), 0.0);
  center[0] = std::log(evaluator.priors().nu_shape / evaluator.priors().nu_rate);
  return center;
}

/// Sample the posterior and back-transform draws to the constrained scale.
inline BarmaFit fit_barma(const PosteriorEvaluator& evaluator, const SamplerConfig& config) {
  BarmaFit fit;
  fit.order = evaluator.order();
  fit.names = parameter_names(evaluator.order());
  const std::vector<double> center = default_init_center(evaluator);
  fit.chains = run_chains(evaluator, config, center, &fit.chain_failures);
  for (auto& chain : fit.chains) {
    for (std::size_t i = 0; i < chain.draws.rows; ++i) chain.draws(i, 0) = std::exp(chain.draws(i, 0));
  }
  return fit;
}

/// Pool post-warmup draws from all chains into one matrix.
inline Matrix pool_draws(const std::vector<ChainDraws>& chains) {
  if (chains.empty()) throw std::invalid_argument("pool_draws: no chains");
  const std::size_t dim = chains.front().draws.cols;
  std::size_t total = 0;
  for (const auto& c : chains) total += c.draws.rows;
  Matrix pooled(total, dim);
  std::size_t at = 0;
  for (const auto& c : chains) {
    std::copy(c.draws.data.begin(), c.draws.data.end(), pooled.data.begin() + at * dim);
    at += c.draws.rows;
  }
  return pooled;
}

}  // namespace barma
