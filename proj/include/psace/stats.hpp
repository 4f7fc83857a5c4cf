#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "psace/error.hpp"

namespace psace {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Log-odds, with the argument kept 1e-12 away from 0 and 1.
inline double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::precondition, "quantile of an empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::precondition, "mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Unbiased (n-1) sample variance.
inline double variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size() - 1);
}

/// One-sample Kolmogorov-Smirnov statistic D_n against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> values, Cdf cdf) {
  if (values.empty()) throw Error(ErrorCode::precondition, "KS test needs at least one value");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic P(D_n > d) with the Stephens small-sample correction.
inline double ks_p_value(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double t = (rn + 0.12 + 0.11 / rn) * d;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Number of modes of a sample: Gaussian kernel density with bandwidth
/// 0.25 sd on a 256-point grid, counting local maxima that reach 10% of the
/// highest peak. A heuristic for multimodal posteriors, not a test.
inline std::size_t count_modes(std::span<const double> values) {
  if (values.size() < 2) return values.size();
  const double sd = std::sqrt(variance(values));
  if (!(sd > 0.0)) return 1;
  const double h = 0.25 * sd;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
  constexpr std::size_t kBins = 1024, kGrid = 256;
  std::vector<double> bins(kBins, 0.0);
  const double bw = (hi - lo) / kBins;
  for (double v : values) bins[std::min(kBins - 1, static_cast<std::size_t>((v - lo) / bw))] += 1.0;
  std::vector<double> dens(kGrid, 0.0);
  for (std::size_t g = 0; g < kGrid; ++g) {
    const double x = lo + (hi - lo) * (static_cast<double>(g) + 0.5) / kGrid;
    for (std::size_t b = 0; b < kBins; ++b) {
      if (bins[b] == 0.0) continue;
      const double z = (x - (lo + (static_cast<double>(b) + 0.5) * bw)) / h;
      if (std::abs(z) < 8.0) dens[g] += bins[b] * std::exp(-0.5 * z * z);
    }
  }
  const double peak = *std::max_element(dens.begin(), dens.end());
  std::size_t modes = 0;
  bool rising = true;
  for (std::size_t g = 1; g < kGrid; ++g) {
    if (dens[g] > dens[g - 1]) {
      rising = true;
    } else if (dens[g] < dens[g - 1]) {
      if (rising && dens[g - 1] >= 0.1 * peak) ++modes;
      rising = false;
    }
  }
  if (rising && dens.back() >= 0.1 * peak) ++modes;
  return std::max<std::size_t>(modes, 1);
}

}  // namespace psace
