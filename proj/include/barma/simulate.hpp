#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "barma/analysis.hpp"
#include "barma/fit.hpp"
#include "barma/model.hpp"
#include "barma/parallel.hpp"
#include "barma/posterior.hpp"
#include "barma/rng.hpp"

namespace barma {

/// A simulated series together with the conditional means realized while
/// generating it (useful for filter replay checks and debugging).
struct SimulatedPath {
  std::vector<double> values;
  std::vector<double> mu;
};

/// Iterate the mean recursion forward, drawing each observation from its
/// conditional beta. The first `burn_in` values are discarded so the
/// initialization (pre-sample terms zeroed) washes out. With covariates,
/// rows must cover the burn-in too: burn_in + n rows.
inline SimulatedPath simulate_barma_path(const ParameterVector& params, const ModelOrder& order,
                                         const LinkFunction& link, std::size_t n,
                                         std::size_t burn_in, const CovariateMatrix& covariates,
                                         RngStream& rng) {
  params.validate();
  if (params.phi.size() != order.p || params.theta.size() != order.q ||
      params.beta.size() != order.r)
    throw std::invalid_argument("simulate_barma: parameter blocks do not match model order");
  if (n < 1) throw std::invalid_argument("simulate_barma: n must be >= 1");
  const std::size_t total = burn_in + n;
  if (order.r > 0 && (covariates.rows() != total || covariates.cols() != order.r))
    throw std::invalid_argument("simulate_barma: covariates must have burn_in + n rows");

  std::vector<double> xb;
  if (order.r > 0) {
    xb.resize(total);
    for (std::size_t t = 0; t < total; ++t) {
      double acc = 0.0;
      for (std::size_t j = 0; j < order.r; ++j) acc += params.beta[j] * covariates(t, j);
      xb[t] = acc;
    }
  }

  std::vector<double> y(total), g_y(total), resid(total), mus(total);
  std::size_t consecutive_clamped = 0;
  std::size_t consecutive_saturated = 0;
  for (std::size_t t = 0; t < total; ++t) {
    double eta = params.alpha;
    if (order.r > 0) eta += xb[t];
    for (std::size_t i = 1; i <= order.p; ++i) {
      if (t >= i) {
        double ar_term = g_y[t - i];
        if (order.r > 0) ar_term -= xb[t - i];
        eta += params.phi[i - 1] * ar_term;
      }
    }
    for (std::size_t j = 1; j <= order.q; ++j) {
      if (t >= j) eta += params.theta[j - 1] * resid[t - j];
    }
    if (!std::isfinite(eta))
      throw numeric_error("simulate_barma: non-finite mean recursion (divergent parameters)");
    const double mu = link.inverse(eta);
    if (mu <= kMuEps || mu >= 1.0 - kMuEps) {
      if (++consecutive_clamped > 10)
        throw numeric_error("simulate_barma: mean pinned at the boundary (divergent recursion)");
    } else {
      consecutive_clamped = 0;
    }
    y[t] = draw_beta(mu, params.nu, rng);
    // near-unit-root recursions can lock into a boundary-to-boundary limit
    // cycle in which mu itself alternates sides; a run of saturated draws
    // is the reliable symptom
    if (y[t] <= kMuEps || y[t] >= 1.0 - kMuEps) {
      if (++consecutive_saturated > 10)
        throw numeric_error(
            "simulate_barma: observations saturated at the boundary (divergent recursion)");
    } else {
      consecutive_saturated = 0;
    }
    g_y[t] = link.eval(y[t]);
    resid[t] = g_y[t] - eta;
    mus[t] = mu;
  }

  SimulatedPath path;
  path.values.assign(y.begin() + burn_in, y.end());
  path.mu.assign(mus.begin() + burn_in, mus.end());
  return path;
}

inline ObservationSeries simulate_barma(const ParameterVector& params, const ModelOrder& order,
                                        const LinkFunction& link, std::size_t n,
                                        std::size_t burn_in, const CovariateMatrix& covariates,
                                        RngStream& rng) {
  return ObservationSeries(
      simulate_barma_path(params, order, link, n, burn_in, covariates, rng).values);
}

// ---------------------------------------------------------------------------
// Monte Carlo study harness
// ---------------------------------------------------------------------------

struct StudyCell {
  ParameterVector truth;
  std::size_t n = 500;
  PriorSpec priors;
  std::string label;
};

struct StudyDesign {
  std::vector<StudyCell> cells;
  std::size_t replicates = 10;
  std::size_t burn_in = 50;
  LinkFunction link;
  SamplerConfig sampler;             // per-fit chain configuration
  double ci_level = 0.95;
  std::vector<double> thresholds;    // unit-root grid, applied when p >= 1
  std::uint64_t seed = 20240901;
  std::size_t threads = 0;

  void validate() const {
    if (cells.empty()) throw std::invalid_argument("StudyDesign: no cells");
    if (replicates < 1) throw std::invalid_argument("StudyDesign: replicates must be >= 1");
    sampler.validate();
  }
};

struct ReplicateResult {
  std::size_t cell = 0;
  std::size_t replicate = 0;
  bool ok = false;
  std::string error;
  std::vector<double> post_mean, lower, upper;
  std::vector<std::uint8_t> covered;       // truth inside the credible interval
  std::vector<double> root_probabilities;  // per threshold, when computed
};

struct CellAggregate {
  std::size_t cell = 0;
  std::size_t completed = 0;
  bool ok = false;  // >= 80% of replicates completed
  std::vector<double> avg_mean, avg_lower, avg_upper, coverage;
  std::vector<double> avg_root_probabilities;
};

struct StudyReport {
  std::vector<ReplicateResult> replicates;
  std::vector<CellAggregate> cells;
};

/// Simulate-fit-summarize over every cell x replicate. Replicates run in
/// parallel with split RNG streams; aggregation is a deterministic
/// sequential reduction over per-replicate records.
inline StudyReport mc_experiment(const StudyDesign& design) {
  design.validate();
  const std::size_t n_cells = design.cells.size();
  const std::size_t reps = design.replicates;

  StudyReport report;
  report.replicates.resize(n_cells * reps);

  RngStream master(design.seed);
  const std::size_t threads =
      design.threads == 0 ? default_thread_count() : design.threads;

  parallel_for(n_cells * reps, threads, [&](std::size_t idx) {
    const std::size_t c = idx / reps;
    const std::size_t k = idx % reps;
    const StudyCell& cell = design.cells[c];
    ReplicateResult& rec = report.replicates[idx];
    rec.cell = c;
    rec.replicate = k;
    try {
      RngStream stream = master.split(c).split(k);
      RngStream sim_rng = stream.split(0);
      const ModelOrder order = cell.truth.order();
      ObservationSeries series = simulate_barma(cell.truth, order, design.link, cell.n,
                                                design.burn_in, CovariateMatrix{}, sim_rng);

      PosteriorEvaluator evaluator(std::move(series), CovariateMatrix{}, order, cell.priors,
                                   design.link);
      SamplerConfig config = design.sampler;
      config.seed = stream.derive_seed(1);
      config.threads = 1;
      const BarmaFit fit = fit_barma(evaluator, config);
      const PosteriorSummary summary = summarize_draws(fit.chains, design.ci_level, fit.names);

      const std::vector<double> truth_flat = cell.truth.flatten();
      for (std::size_t j = 0; j < summary.parameters.size(); ++j) {
        const auto& s = summary.parameters[j];
        rec.post_mean.push_back(s.mean);
        rec.lower.push_back(s.lower);
        rec.upper.push_back(s.upper);
        rec.covered.push_back(truth_flat[j] >= s.lower && truth_flat[j] <= s.upper ? 1 : 0);
      }
      if (order.p >= 1 && !design.thresholds.empty()) {
        const RootReport roots = unit_root_probability(fit.chains, order, design.thresholds);
        rec.root_probabilities = roots.probabilities;
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });

  for (std::size_t c = 0; c < n_cells; ++c) {
    CellAggregate agg;
    agg.cell = c;
    const std::size_t dim = design.cells[c].truth.order().dim();
    agg.avg_mean.assign(dim, 0.0);
    agg.avg_lower.assign(dim, 0.0);
    agg.avg_upper.assign(dim, 0.0);
    agg.coverage.assign(dim, 0.0);
    std::size_t n_thresholds = design.thresholds.size();
    const bool with_roots = design.cells[c].truth.order().p >= 1 && n_thresholds > 0;
    if (with_roots) agg.avg_root_probabilities.assign(n_thresholds, 0.0);

    for (std::size_t k = 0; k < reps; ++k) {
      const ReplicateResult& rec = report.replicates[c * reps + k];
      if (!rec.ok) continue;
      ++agg.completed;
      for (std::size_t j = 0; j < dim; ++j) {
        agg.avg_mean[j] += rec.post_mean[j];
        agg.avg_lower[j] += rec.lower[j];
        agg.avg_upper[j] += rec.upper[j];
        agg.coverage[j] += rec.covered[j];
      }
      if (with_roots)
        for (std::size_t t = 0; t < n_thresholds; ++t)
          agg.avg_root_probabilities[t] += rec.root_probabilities[t];
    }
    if (agg.completed > 0) {
      const double denom = static_cast<double>(agg.completed);
      for (std::size_t j = 0; j < dim; ++j) {
        agg.avg_mean[j] /= denom;
        agg.avg_lower[j] /= denom;
        agg.avg_upper[j] /= denom;
        agg.coverage[j] /= denom;
      }
      for (auto& v : agg.avg_root_probabilities) v /= denom;
    }
    agg.ok = agg.completed * 5 >= reps * 4;  // at least 80%
    report.cells.push_back(std::move(agg));
  }
  return report;
}

}  // namespace barma
