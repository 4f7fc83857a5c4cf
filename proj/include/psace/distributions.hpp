#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "psace/error.hpp"

namespace psace {

/// Anything that hands out uniforms on (0,1) and [0,1).
template <class Rng>
concept UniformSource = requires(Rng& rng) {
  { rng.uniform() } -> std::convertible_to<double>;
  { rng.uniform_open() } -> std::convertible_to<double>;
};

/// Standard normal via the Marsaglia polar method (no cached second value,
/// so the stream position is a pure function of the call count).
template <UniformSource Rng>
double sample_standard_normal(Rng& rng) {
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

template <UniformSource Rng>
double sample_normal(double mean, double sd, Rng& rng) {
  return mean + sd * sample_standard_normal(rng);
}

/// Gamma(shape, 1), Marsaglia-Tsang squeeze; shape < 1 via the U^(1/a) boost.
template <UniformSource Rng>
double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw Error(ErrorCode::parameter_domain, "gamma shape must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

template <UniformSource Rng>
double sample_beta(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::parameter_domain, "beta parameters must be positive");
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  return x / (x + y);
}

/// Dirichlet draw written into `out`; every concentration must be positive.
template <UniformSource Rng>
void sample_dirichlet(std::span<const double> alpha, std::span<double> out, Rng& rng) {
  if (alpha.empty() || alpha.size() != out.size())
    throw Error(ErrorCode::parameter_domain, "dirichlet dimension mismatch");
  for (double a : alpha)
    if (!(a > 0.0)) throw Error(ErrorCode::parameter_domain, "dirichlet parameters must be positive");
  if (alpha.size() == 1) {
    out[0] = 1.0;
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = sample_gamma(alpha[i], rng);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

template <UniformSource Rng>
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  sample_dirichlet(alpha, std::span<double>(out), rng);
  return out;
}

/// Binomial(n, p). Inversion for small means, otherwise Knuth's
/// order-statistic splitting through Beta draws; both are exact.
template <UniformSource Rng>
std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng) {
  if (n <= 0 || !(p > 0.0)) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - sample_binomial(n, 1.0 - p, rng);
  if (static_cast<double>(n) * p < 30.0) {
    const double q = 1.0 - p;
    const double s = p / q;
    const double a = static_cast<double>(n + 1) * s;
    const double r0 = std::pow(q, static_cast<double>(n));
    for (;;) {
      double r = r0;
      double u = rng.uniform();
      std::int64_t x = 0;
      while (u > r) {
        u -= r;
        ++x;
        if (x > n) break;
        r *= a / static_cast<double>(x) - s;
      }
      if (x <= n) return x;
    }
  }
  const std::int64_t a = 1 + n / 2;
  const std::int64_t b = n + 1 - a;
  const double x = sample_beta(static_cast<double>(a), static_cast<double>(b), rng);
  if (x >= p) return sample_binomial(a - 1, p / x, rng);
  return a + sample_binomial(b - 1, (p - x) / (1.0 - x), rng);
}

/// Index drawn with probability proportional to weights (need not sum to 1).
template <UniformSource Rng>
std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(total > 0.0))
    throw Error(ErrorCode::parameter_domain, "categorical weights must have positive total");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw Error(ErrorCode::parameter_domain, "negative categorical weight");
    if (weights[i] > 0.0) last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

/// Multinomial(n, probs) by sequential conditional binomials.
template <UniformSource Rng>
std::vector<std::int64_t> sample_multinomial(std::int64_t n, std::span<const double> probs, Rng& rng) {
  std::vector<std::int64_t> out(probs.size(), 0);
  double remaining_mass = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::int64_t remaining = n;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    const double q = remaining_mass > 0.0 ? std::min(1.0, probs[i] / remaining_mass) : 0.0;
    out[i] = sample_binomial(remaining, q, rng);
    remaining -= out[i];
    remaining_mass -= probs[i];
  }
  if (!probs.empty()) out.back() += remaining;
  return out;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

struct TruncatedNormalDraw {
  double value = 0.0;
  bool clamped = false;  // interval carried < 1e-300 of the mass
};

/// Normal(mean, sd) restricted to [lo, hi], by inverting the CDF. Works in
/// the lower tail (reflecting if needed) so the CDF differences keep precision.
template <UniformSource Rng>
TruncatedNormalDraw sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!(sd > 0.0) || !(lo < hi))
    throw Error(ErrorCode::parameter_domain, "truncated normal needs sd > 0 and lo < hi");
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  const bool reflect = a > 0.0;
  if (reflect) {
    const double t = a;
    a = -b;
    b = -t;
  }
  const double fa = normal_cdf(a);
  const double fb = normal_cdf(b);
  const double u = rng.uniform_open();
  if (!(fb - fa > 1e-300)) {
    // All the mass sits beyond the bound nearest the mean.
    const double x = reflect ? lo : (mean > hi ? hi : lo);
    return {std::clamp(x, lo, hi), true};
  }
  double z = normal_quantile(fa + u * (fb - fa));
  z = std::clamp(z, a, b);
  if (reflect) z = -z;
  return {std::clamp(mean + sd * z, lo, hi), false};
}

}  // namespace psace
