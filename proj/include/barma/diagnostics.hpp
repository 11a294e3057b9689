#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "barma/math.hpp"
#include "barma/sampler.hpp"

namespace barma {

struct EssRhat {
  double ess = kNaN;
  double rhat = kNaN;
};

namespace detail {

inline double sequence_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Biased (1/n) autocovariance at the given lag.
inline double autocov(std::span<const double> x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace detail

/// ESS and split-chain R-hat for one scalar quantity. Each input sequence
/// is split in half; the effective sample size uses per-chain
/// autocovariances with Geyer's initial-monotone truncation, and R-hat is
/// the usual between/within variance ratio over the split halves.
/// Constant sequences yield NaN markers.
inline EssRhat ess_rhat_sequences(const std::vector<std::vector<double>>& sequences) {
  std::size_t min_len = static_cast<std::size_t>(-1);
  for (const auto& s : sequences) min_len = std::min(min_len, s.size());
  if (sequences.empty() || min_len < 4) return {};

  // split each chain in half (dropping at most one middle element)
  const std::size_t half = min_len / 2;
  std::vector<std::span<const double>> splits;
  for (const auto& s : sequences) {
    splits.emplace_back(s.data(), half);
    splits.emplace_back(s.data() + (min_len - half), half);
  }

  const std::size_t m = splits.size();
  const std::size_t n = half;

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = detail::sequence_mean(splits[j]);
    double ss = 0.0;
    for (double v : splits[j]) ss += sqr(v - means[j]);
    vars[j] = ss / static_cast<double>(n - 1);
  }

  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);

  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double b_over_n = 0.0;
  for (double v : means) b_over_n += sqr(v - grand);
  b_over_n /= static_cast<double>(m - 1);

  const double var_plus = (static_cast<double>(n - 1) / n) * w + b_over_n;
  // constant chains (up to accumulation roundoff) have no information
  const double degenerate = sqr(1e-12 * (std::abs(grand) + 1.0));
  if (!(w > degenerate) || !(var_plus > degenerate)) return {};

  EssRhat out;
  out.rhat = std::sqrt(var_plus / w);

  auto mean_autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += detail::autocov(splits[j], means[j], lag);
    return s / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (w - mean_autocov(lag)) / var_plus; };

  // Geyer pairs: sum rho(2k) + rho(2k+1) while positive, forced monotone.
  double sum_pairs = 0.0;
  double prev_pair = kPosInf;
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    sum_pairs += pair;
    prev_pair = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1e-8);
  out.ess = static_cast<double>(m * n) / tau;
  return out;
}

/// Per-parameter diagnostics across chains (post-warmup draws).
inline std::vector<EssRhat> ess_rhat(const std::vector<ChainDraws>& chains) {
  if (chains.empty()) throw std::invalid_argument("ess_rhat: no chains");
  const std::size_t dim = chains.front().draws.cols;
  std::size_t min_rows = static_cast<std::size_t>(-1);
  for (const auto& c : chains) min_rows = std::min(min_rows, c.draws.rows);
  if (min_rows < 10) throw std::invalid_argument("ess_rhat: need at least 10 draws per chain");

  std::vector<EssRhat> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<std::vector<double>> seqs;
    seqs.reserve(chains.size());
    for (const auto& c : chains) {
      auto col = c.draws.column(j);
      col.resize(min_rows);
      seqs.push_back(std::move(col));
    }
    out[j] = ess_rhat_sequences(seqs);
  }
  return out;
}

/// ESS of a single scalar series (used for the stepping-stone standard error).
inline double ess_single(std::span<const double> series) {
  std::vector<std::vector<double>> seqs{std::vector<double>(series.begin(), series.end())};
  const EssRhat d = ess_rhat_sequences(seqs);
  return d.ess;
}

}  // namespace barma
