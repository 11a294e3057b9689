#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "barma/math.hpp"
#include "barma/matrix.hpp"
#include "barma/parallel.hpp"
#include "barma/rng.hpp"

namespace barma {

// A sampling target is anything with
//   std::size_t dim() const;
//   double log_density(std::span<const double> x) const;
//   double log_density_grad(std::span<const double> x, std::span<double> grad) const;
// log_density_grad returns the density value and fills the gradient.

/// Position/momentum pair with cached log density and gradient.
struct PhaseState {
  std::vector<double> position;
  std::vector<double> momentum;
  std::vector<double> grad;
  double log_density = kNegInf;

  template <class Target>
  static PhaseState make(const Target& target, std::vector<double> position) {
    PhaseState s;
    s.position = std::move(position);
    s.momentum.assign(s.position.size(), 0.0);
    s.grad.assign(s.position.size(), 0.0);
    s.log_density = target.log_density_grad(s.position, s.grad);
    return s;
  }
};

/// H = U + kinetic term with U = -log pi and unit mass matrix.
inline double hamiltonian(const PhaseState& s) {
  if (!std::isfinite(s.log_density)) return kPosInf;
  double kinetic = 0.0;
  for (double k : s.momentum) kinetic += k * k;
  return -s.log_density + 0.5 * kinetic;
}

/// One leapfrog step of (signed) size eps: half momentum step, full
/// position step, half momentum step. Refreshes the cached density/gradient.
template <class Target>
void leapfrog(const Target& target, PhaseState& state, double eps) {
  const std::size_t d = state.position.size();
  for (std::size_t i = 0; i < d; ++i) state.momentum[i] += 0.5 * eps * state.grad[i];
  for (std::size_t i = 0; i < d; ++i) state.position[i] += eps * state.momentum[i];
  state.log_density = target.log_density_grad(state.position, state.grad);
  for (std::size_t i = 0; i < d; ++i) state.momentum[i] += 0.5 * eps * state.grad[i];
}

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::size_t n_iterations = 2000;   // per chain, warmup included
  double warmup_fraction = 0.5;
  double target_accept = 0.8;
  std::size_t max_tree_depth = 10;
  std::uint64_t seed = 20240901;
  std::size_t threads = 0;           // 0: use hardware concurrency

  std::size_t n_warmup() const {
    return static_cast<std::size_t>(std::llround(warmup_fraction * n_iterations));
  }

  void validate() const {
    if (n_chains < 1) throw std::invalid_argument("SamplerConfig: n_chains must be >= 1");
    if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0))
      throw std::invalid_argument("SamplerConfig: warmup fraction must lie in (0,1)");
    if (n_iterations <= n_warmup())
      throw std::invalid_argument("SamplerConfig: no iterations left after warmup");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw std::invalid_argument("SamplerConfig: target acceptance must lie in (0,1)");
  }
};

/// Post-warmup draws and transition diagnostics of a single chain.
struct ChainDraws {
  Matrix draws;                        // rows x dim
  std::vector<double> accept_stat;
  std::vector<int> tree_depth;
  std::vector<std::uint8_t> divergent;
  double step_size = 0.0;
  std::uint64_t seed = 0;

  std::size_t n_divergent() const {
    std::size_t n = 0;
    for (auto f : divergent) n += f;
    return n;
  }
};

struct TransitionStats {
  double accept = 0.0;       // mean Metropolis statistic over evaluated leaves
  int depth = 0;             // doublings performed
  bool divergent = false;
  std::size_t n_leapfrog = 0;
};

/// Energy-error threshold above which a trajectory counts as divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

namespace detail {

inline bool uturn(const PhaseState& minus, const PhaseState& plus) {
  double dot_minus = 0.0, dot_plus = 0.0;
  for (std::size_t i = 0; i < minus.position.size(); ++i) {
    const double delta = plus.position[i] - minus.position[i];
    dot_minus += delta * minus.momentum[i];
    dot_plus += delta * plus.momentum[i];
  }
  return dot_minus < 0.0 || dot_plus < 0.0;
}

struct NutsTree {
  PhaseState minus, plus, proposal;
  double log_sum_w = kNegInf;
  double accept_sum = 0.0;
  std::size_t n_leaf = 0;
  bool turning = false;
  bool divergent = false;
};

/// Recursive doubling with multinomial sampling over the new subtree.
template <class Target>
NutsTree build_tree(const Target& target, const PhaseState& from, double dir_eps, int depth,
                    double h0, RngStream& rng) {
  if (depth == 0) {
    NutsTree leaf;
    leaf.proposal = from;
    leapfrog(target, leaf.proposal, dir_eps);
    const double h = hamiltonian(leaf.proposal);
    const double delta_h = h - h0;
    leaf.minus = leaf.proposal;
    leaf.plus = leaf.proposal;
    leaf.n_leaf = 1;
    if (!std::isfinite(h) || std::abs(delta_h) > kDivergenceThreshold) {
      leaf.divergent = true;
      leaf.log_sum_w = kNegInf;
      return leaf;
    }
    leaf.log_sum_w = -delta_h;
    leaf.accept_sum = std::min(1.0, std::exp(-delta_h));
    return leaf;
  }

  NutsTree first = build_tree(target, from, dir_eps, depth - 1, h0, rng);
  if (first.divergent || first.turning) return first;

  const PhaseState& inner = dir_eps > 0.0 ? first.plus : first.minus;
  NutsTree second = build_tree(target, inner, dir_eps, depth - 1, h0, rng);

  NutsTree merged;
  merged.accept_sum = first.accept_sum + second.accept_sum;
  merged.n_leaf = first.n_leaf + second.n_leaf;
  merged.divergent = second.divergent;
  merged.turning = second.turning;
  merged.minus = dir_eps > 0.0 ? std::move(first.minus) : std::move(second.minus);
  merged.plus = dir_eps > 0.0 ? std::move(second.plus) : std::move(first.plus);
  if (merged.divergent || merged.turning) return merged;

  const double top = std::max(first.log_sum_w, second.log_sum_w);
  merged.log_sum_w =
      top + std::log(std::exp(first.log_sum_w - top) + std::exp(second.log_sum_w - top));
  const double p_second = std::exp(second.log_sum_w - merged.log_sum_w);
  merged.proposal =
      rng.uniform() < p_second ? std::move(second.proposal) : std::move(first.proposal);
  merged.turning = uturn(merged.minus, merged.plus);
  return merged;
}

}  // namespace detail

/// One No-U-Turn transition (multinomial variant, unit metric). The tree
/// is grown by doubling at depths 0..max_depth; max_depth = 0 therefore
/// degenerates to one leapfrog step with a Metropolis correction.
template <class Target>
PhaseState nuts_transition(const Target& target, PhaseState state, double eps,
                           std::size_t max_depth, RngStream& rng,
                           TransitionStats* stats = nullptr) {
  for (auto& k : state.momentum) k = rng.normal();
  const double h0 = hamiltonian(state);

  PhaseState traj_minus = state;
  PhaseState traj_plus = state;
  PhaseState proposal = state;
  double log_sum_w = 0.0;  // weight of the initial point is exp(h0 - h0) = 1

  double accept_sum = 0.0;
  std::size_t n_leaf = 0;
  int depth_done = 0;
  bool divergent = false;

  for (std::size_t depth = 0; depth <= max_depth; ++depth) {
    const double dir = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const PhaseState& from = dir > 0.0 ? traj_plus : traj_minus;
    detail::NutsTree tree =
        detail::build_tree(target, from, dir * eps, static_cast<int>(depth), h0, rng);
    accept_sum += tree.accept_sum;
    n_leaf += tree.n_leaf;
    if (tree.divergent) {
      divergent = true;
      break;
    }
    if (tree.turning) break;
    // biased progressive sampling: favor the fresh subtree
    if (std::log(rng.uniform()) < tree.log_sum_w - log_sum_w) proposal = tree.proposal;
    log_sum_w = log_sum_exp(std::array{log_sum_w, tree.log_sum_w});
    if (dir > 0.0)
      traj_plus = std::move(tree.plus);
    else
      traj_minus = std::move(tree.minus);
    depth_done = static_cast<int>(depth) + 1;
    if (detail::uturn(traj_minus, traj_plus)) break;
  }

  if (stats) {
    stats->accept = n_leaf > 0 ? accept_sum / static_cast<double>(n_leaf) : 0.0;
    stats->depth = depth_done;
    stats->divergent = divergent;
    stats->n_leapfrog = n_leaf;
  }
  return proposal;
}

/// Doubling/halving heuristic for the initial step size: target a one-step
/// acceptance ratio of 0.5 at the chain's starting point.
template <class Target>
double find_initial_step_size(const Target& target, const PhaseState& init, RngStream& rng) {
  PhaseState base = init;
  for (auto& k : base.momentum) k = rng.normal();
  const double h0 = hamiltonian(base);

  double eps = 1.0;
  auto log_ratio_at = [&](double e) {
    PhaseState trial = base;
    leapfrog(target, trial, e);
    const double h1 = hamiltonian(trial);
    return std::isfinite(h1) ? h0 - h1 : kNegInf;
  };

  double log_ratio = log_ratio_at(eps);
  const double dir = log_ratio > std::log(0.5) ? 1.0 : -1.0;
  for (int iter = 0; iter < 100; ++iter) {
    if (dir * log_ratio <= dir * std::log(0.5)) break;
    eps *= std::pow(2.0, dir);
    if (eps < 1e-10) throw numeric_error("step size initialization underflow");
    if (eps > 1e7) throw numeric_error("step size initialization overflow");
    log_ratio = log_ratio_at(eps);
  }
  return eps;
}

/// Dual-averaging step-size adaptation (Hoffman–Gelman schedule:
/// gamma = 0.05, t0 = 10, kappa = 0.75, mu = log(10 eps0)).
class DualAveraging {
 public:
  DualAveraging(double eps0, double target_accept)
      : mu_(std::log(10.0 * eps0)), log_eps_(std::log(eps0)), target_(target_accept) {}

  void update(double accept) {
    ++m_;
    const double m = static_cast<double>(m_);
    const double eta = 1.0 / (m + kT0);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept);
    log_eps_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
    const double w = std::pow(m, -kKappa);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  }

  double current() const { return std::exp(log_eps_); }
  double adapted() const { return m_ == 0 ? std::exp(log_eps_) : std::exp(log_eps_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  double mu_;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double h_bar_ = 0.0;
  double target_;
  std::size_t m_ = 0;
};

namespace detail {

template <class Target>
PhaseState initialize_chain(const Target& target, std::span<const double> center,
                            RngStream& rng) {
  const std::size_t d = target.dim();
  if (center.size() != d)
    throw std::invalid_argument("run_chains: init center dimension mismatch");
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<double> pos(d);
    for (std::size_t i = 0; i < d; ++i) pos[i] = center[i] + rng.uniform(-0.5, 0.5);
    PhaseState state = PhaseState::make(target, std::move(pos));
    if (std::isfinite(state.log_density)) return state;
  }
  throw numeric_error("run_chains: no finite starting point found near init center");
}

}  // namespace detail

/// Warm up one chain with dual averaging and return the frozen step size
/// together with the post-warmup state.
template <class Target>
double adapt_warmup(const Target& target, PhaseState& state, const SamplerConfig& config,
                    RngStream& rng) {
  const std::size_t warmup = config.n_warmup();
  if (warmup < 20)
    throw std::invalid_argument("adapt_warmup: need at least 20 warmup iterations");
  const double eps0 = find_initial_step_size(target, state, rng);
  DualAveraging da(eps0, config.target_accept);
  for (std::size_t it = 0; it < warmup; ++it) {
    TransitionStats stats;
    state = nuts_transition(target, std::move(state), da.current(), config.max_tree_depth, rng,
                            &stats);
    da.update(stats.accept);
  }
  const double eps = da.adapted();
  if (!(eps >= 1e-10))
    throw numeric_error("adapt_warmup: step size underflow after adaptation");
  return eps;
}

inline std::span<const double> center_or(std::span<const double> center, std::size_t d) {
  static const std::vector<double> zero(64, 0.0);
  if (!center.empty()) return center;
  if (d > zero.size())
    throw std::invalid_argument("run_chains: dimension too large for default center");
  return std::span<const double>(zero).subspan(0, d);
}

/// Run one chain end to end: initialize, adapt, sample.
template <class Target>
ChainDraws run_chain(const Target& target, const SamplerConfig& config,
                     std::span<const double> init_center, RngStream rng) {
  const std::size_t d = target.dim();
  PhaseState state = detail::initialize_chain(target, center_or(init_center, d), rng);
  const double eps = adapt_warmup(target, state, config, rng);

  const std::size_t keep = config.n_iterations - config.n_warmup();
  ChainDraws out;
  out.draws = Matrix(keep, d);
  out.accept_stat.resize(keep);
  out.tree_depth.resize(keep);
  out.divergent.resize(keep);
  out.step_size = eps;
  out.seed = rng.id();

  for (std::size_t it = 0; it < keep; ++it) {
    TransitionStats stats;
    state = nuts_transition(target, std::move(state), eps, config.max_tree_depth, rng, &stats);
    std::copy(state.position.begin(), state.position.end(), out.draws.row(it).begin());
    out.accept_stat[it] = stats.accept;
    out.tree_depth[it] = stats.depth;
    out.divergent[it] = stats.divergent ? 1 : 0;
  }
  return out;
}

/// Run config.n_chains independent chains from jittered starts. Chains
/// execute in parallel; per-chain RNG streams are split from the master
/// seed, so results are identical for any thread count. Chains that fail
/// numerically are dropped (their errors reported via `failures`); throws
/// only when every chain fails.
template <class Target>
std::vector<ChainDraws> run_chains(const Target& target, const SamplerConfig& config,
                                   std::span<const double> init_center = {},
                                   std::vector<std::string>* failures = nullptr) {
  config.validate();
  RngStream master(config.seed);
  const std::size_t threads = config.threads == 0 ? default_thread_count() : config.threads;

  std::vector<ChainDraws> results(config.n_chains);
  std::vector<std::string> errors(config.n_chains);
  std::vector<std::uint8_t> ok(config.n_chains, 0);

  parallel_for(config.n_chains, threads, [&](std::size_t c) {
    try {
      results[c] = run_chain(target, config, init_center, master.split(c));
      ok[c] = 1;
    } catch (const std::exception& e) {
      errors[c] = "chain " + std::to_string(c) + ": " + e.what();
    }
  });

  std::vector<ChainDraws> kept;
  for (std::size_t c = 0; c < config.n_chains; ++c) {
    if (ok[c])
      kept.push_back(std::move(results[c]));
    else if (failures)
      failures->push_back(errors[c]);
  }
  if (kept.empty()) {
    std::string all;
    for (const auto& e : errors)
      if (!e.empty()) all += (all.empty() ? "" : "; ") + e;
    throw numeric_error("run_chains: all chains failed (" + all + ")");
  }
  return kept;
}

}  // namespace barma
