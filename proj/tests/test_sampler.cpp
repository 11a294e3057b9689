#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "barma/fit.hpp"
#include "barma/posterior.hpp"
#include "barma/sampler.hpp"
#include "barma/simulate.hpp"
#include "test_util.hpp"

namespace {

using barma::PhaseState;
using barma::RngStream;
using barma::SamplerConfig;
using oracle::StdNormalTarget;

TEST(Hamiltonian, ZeroMomentumIsPotential) {
  StdNormalTarget target{1};
  PhaseState s = PhaseState::make(target, {1.7});
  EXPECT_DOUBLE_EQ(barma::hamiltonian(s), -s.log_density);
  s.momentum[0] = 1.0;
  EXPECT_DOUBLE_EQ(barma::hamiltonian(s), -s.log_density + 0.5);
}

TEST(Hamiltonian, StandardNormalHandValue) {
  StdNormalTarget target{1};
  PhaseState s = PhaseState::make(target, {1.0});
  s.momentum[0] = 1.0;
  EXPECT_NEAR(barma::hamiltonian(s), 0.5 + 0.5 + 0.5 * std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(Leapfrog, HandIteratedStep) {
  // quadratic target, start gamma = 0, kappa = 1, eps = 0.2:
  // half kick leaves kappa = 1, drift gives gamma = 0.2,
  // half kick gives kappa = 1 - 0.1*0.2 = 0.98
  StdNormalTarget target{1};
  PhaseState s = PhaseState::make(target, {0.0});
  s.momentum[0] = 1.0;
  barma::leapfrog(target, s, 0.2);
  EXPECT_NEAR(s.position[0], 0.2, 1e-15);
  EXPECT_NEAR(s.momentum[0], 0.98, 1e-15);
}

TEST(Leapfrog, Reversibility) {
  StdNormalTarget target{3};
  PhaseState s = PhaseState::make(target, {0.3, -1.2, 0.7});
  s.momentum = {0.5, 0.25, -1.0};
  PhaseState orig = s;

  for (int i = 0; i < 25; ++i) barma::leapfrog(target, s, 0.15);
  for (auto& k : s.momentum) k = -k;
  for (int i = 0; i < 25; ++i) barma::leapfrog(target, s, 0.15);
  for (auto& k : s.momentum) k = -k;

  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.position[i], orig.position[i], 1e-12);
    EXPECT_NEAR(s.momentum[i], orig.momentum[i], 1e-12);
  }
}

TEST(Leapfrog, EnergyDriftSmall) {
  // 100 steps at eps = 0.01 on the quadratic target
  StdNormalTarget target{1};
  PhaseState s = PhaseState::make(target, {1.0});
  s.momentum[0] = 0.5;
  const double h0 = barma::hamiltonian(s);
  for (int i = 0; i < 100; ++i) barma::leapfrog(target, s, 0.01);
  EXPECT_LT(std::abs(barma::hamiltonian(s) - h0), 1e-3);
}

TEST(Leapfrog, EnergyErrorOrder) {
  // single-step energy error shrinks by at least 3.5x when eps is halved
  StdNormalTarget target{1};
  auto dh = [&](double eps) {
    PhaseState s = PhaseState::make(target, {1.1});
    s.momentum[0] = 0.6;
    const double h0 = barma::hamiltonian(s);
    barma::leapfrog(target, s, eps);
    return std::abs(barma::hamiltonian(s) - h0);
  };
  const double e1 = dh(0.4);
  const double e2 = dh(0.2);
  EXPECT_GE(e1 / e2, 3.5);
}

TEST(Nuts, StandardNormalMoments) {
  StdNormalTarget target{1};
  SamplerConfig config;
  config.n_chains = 1;
  config.n_iterations = 21000;
  config.warmup_fraction = 1000.0 / 21000.0;
  config.seed = 8;
  config.threads = 1;
  const auto chains = barma::run_chains(target, config);
  ASSERT_EQ(chains.size(), 1u);
  const auto& draws = chains[0].draws;
  ASSERT_EQ(draws.rows, 20000u);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < draws.rows; ++i) {
    sum += draws(i, 0);
    sumsq += draws(i, 0) * draws(i, 0);
  }
  const double mean = sum / static_cast<double>(draws.rows);
  const double var = sumsq / static_cast<double>(draws.rows) - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.03);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Nuts, CorrelatedNormalRecoversCorrelation) {
  oracle::CorrelatedNormal2 target{0.8};
  SamplerConfig config;
  config.n_chains = 1;
  config.n_iterations = 22000;
  config.warmup_fraction = 2000.0 / 22000.0;
  config.seed = 9;
  config.threads = 1;
  const auto chains = barma::run_chains(target, config);
  const auto& draws = chains[0].draws;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = static_cast<double>(draws.rows);
  for (std::size_t i = 0; i < draws.rows; ++i) {
    sx += draws(i, 0);
    sy += draws(i, 1);
    sxx += draws(i, 0) * draws(i, 0);
    syy += draws(i, 1) * draws(i, 1);
    sxy += draws(i, 0) * draws(i, 1);
  }
  const double corr = (sxy / n - sx / n * sy / n) /
                      std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
  EXPECT_NEAR(corr, 0.8, 0.03);
}

TEST(Nuts, MaxDepthZeroIsSingleLeapfrogMetropolis) {
  StdNormalTarget target{1};
  RngStream rng(10);
  PhaseState state = PhaseState::make(target, {0.4});
  double sum = 0.0, sumsq = 0.0;
  const int iters = 30000;
  for (int i = 0; i < iters; ++i) {
    barma::TransitionStats stats;
    state = barma::nuts_transition(target, std::move(state), 0.9, 0, rng, &stats);
    EXPECT_EQ(stats.n_leapfrog, 1u);  // exactly one leapfrog evaluation
    EXPECT_LE(stats.depth, 1);
    sum += state.position[0];
    sumsq += state.position[0] * state.position[0];
  }
  // still a valid MCMC for the target
  EXPECT_NEAR(sum / iters, 0.0, 0.05);
  EXPECT_NEAR(sumsq / iters, 1.0, 0.08);
}

TEST(Adaptation, HitsTargetAcceptance) {
  StdNormalTarget target{5};
  SamplerConfig config;
  config.n_chains = 1;
  config.n_iterations = 3000;
  config.warmup_fraction = 0.5;
  config.target_accept = 0.8;
  config.seed = 11;
  config.threads = 1;
  const auto chains = barma::run_chains(target, config);
  double acc = 0.0;
  for (double a : chains[0].accept_stat) acc += a;
  acc /= static_cast<double>(chains[0].accept_stat.size());
  EXPECT_NEAR(acc, 0.8, 0.1);
}

TEST(Adaptation, HigherTargetGivesSmallerStep) {
  StdNormalTarget target{3};
  auto adapted_eps = [&](double target_accept) {
    RngStream rng(12);
    PhaseState state = PhaseState::make(target, {0.1, -0.2, 0.3});
    SamplerConfig config;
    config.n_iterations = 2000;
    config.warmup_fraction = 0.5;
    config.target_accept = target_accept;
    return barma::adapt_warmup(target, state, config, rng);
  };
  EXPECT_LT(adapted_eps(0.99), adapted_eps(0.6));
}

TEST(Adaptation, DeterministicGivenSeed) {
  StdNormalTarget target{2};
  auto run = [&]() {
    RngStream rng(13);
    PhaseState state = PhaseState::make(target, {0.0, 0.0});
    SamplerConfig config;
    config.n_iterations = 1000;
    config.warmup_fraction = 0.5;
    return barma::adapt_warmup(target, state, config, rng);
  };
  EXPECT_EQ(run(), run());
}

TEST(RunChains, BitwiseDeterminism) {
  StdNormalTarget target{3};
  SamplerConfig config;
  config.n_chains = 2;
  config.n_iterations = 600;
  config.seed = 14;
  config.threads = 2;  // parallel execution must not change the bits
  const auto a = barma::run_chains(target, config);
  config.threads = 1;
  const auto b = barma::run_chains(target, config);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    ASSERT_EQ(a[c].draws.data.size(), b[c].draws.data.size());
    for (std::size_t i = 0; i < a[c].draws.data.size(); ++i)
      ASSERT_EQ(a[c].draws.data[i], b[c].draws.data[i]);
    EXPECT_EQ(a[c].step_size, b[c].step_size);
  }
}

TEST(RunChains, RecoversBarmaParameters) {
  // beta-ARMA(0,0) with known nu: the posterior concentrates near truth
  barma::RngStream rng(15);
  barma::ParameterVector truth(50.0, 0.0, {}, {}, {});
  const auto series =
      barma::simulate_barma(truth, {0, 0, 0}, {}, 500, 50, {}, rng);
  barma::PriorSpec priors;  // Gamma(5, 0.1), flat normals
  barma::PosteriorEvaluator evaluator(series, {}, {0, 0, 0}, priors, {});
  SamplerConfig config;
  config.n_chains = 2;
  config.n_iterations = 1500;
  config.seed = 16;
  const auto fit = barma::fit_barma(evaluator, config);
  ASSERT_EQ(fit.chains.size(), 2u);

  const auto pooled = barma::pool_draws(fit.chains);
  double nu_mean = 0.0, alpha_mean = 0.0;
  for (std::size_t i = 0; i < pooled.rows; ++i) {
    nu_mean += pooled(i, 0);
    alpha_mean += pooled(i, 1);
  }
  nu_mean /= static_cast<double>(pooled.rows);
  alpha_mean /= static_cast<double>(pooled.rows);
  EXPECT_GT(nu_mean, 38.0);
  EXPECT_LT(nu_mean, 64.0);
  EXPECT_NEAR(alpha_mean, 0.0, 0.05);
  for (std::size_t i = 0; i < pooled.rows; ++i) ASSERT_GT(pooled(i, 0), 0.0);
}

}  // namespace
