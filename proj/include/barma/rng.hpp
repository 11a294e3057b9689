#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "barma/math.hpp"

namespace barma {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Seedable 64-bit generator (xoshiro256++) with hash-derived child
/// streams. Identical seeds give identical sequences on every platform;
/// distinct split keys give streams that never share state, so chains,
/// replicates and forecast workers can run in parallel and still produce
/// the same bits as a serial run.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : id_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  /// Derive an independent child stream. Pure: does not advance this stream.
  RngStream split(std::uint64_t key) const { return RngStream(derive_seed(key)); }

  /// The seed a split(key) child would be constructed from.
  std::uint64_t derive_seed(std::uint64_t key) const {
    std::uint64_t sm = id_ ^ (0x9e3779b97f4a7c15ULL * (key + 1));
    return detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0,1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Marsaglia polar method; the spare deviate is
  /// cached so consumption order is fixed by the call sequence alone.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  std::uint64_t id() const { return id_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t id_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Gamma(shape, rate 1) via the Marsaglia–Tsang squeeze; shapes below one
/// use the boosting identity Gamma(a) = Gamma(a+1) * U^{1/a}.
inline double draw_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0)) throw std::domain_error("draw_gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = rng.uniform();
    return draw_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Beta draw in the mean/precision parameterization: X/(X+Y) with
/// X ~ Gamma(nu*mu), Y ~ Gamma(nu*(1-mu)). Clamped into the open interval.
inline double draw_beta(double mu, double nu, RngStream& rng) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("draw_beta: mu must lie in (0,1)");
  if (!(nu > 0.0)) throw std::domain_error("draw_beta: nu must be positive");
  const double x = draw_gamma(nu * mu, rng);
  const double y = draw_gamma(nu * (1.0 - mu), rng);
  const double b = x / (x + y);
  if (b < kMuEps) return kMuEps;
  if (b > 1.0 - kMuEps) return 1.0 - kMuEps;
  return b;
}

}  // namespace barma
