#pragma once

#include "psace.hpp"

namespace fixtures {

// Three-trial nonmonotone design with deltas (0.8, 0.5, 0.7, 0.3, 0.6, 0.1, 0.5, 0.2).
inline psace::ParameterSet three_trials() {
  psace::ParameterSet t(3, false);
  const double pi[3][4] = {{0.6, 0.2, 0.1, 0.1}, {0.1, 0.6, 0.2, 0.1}, {0.1, 0.1, 0.6, 0.2}};
  const double alpha[3] = {0.4, 0.5, 0.6};
  for (std::size_t r = 0; r < 3; ++r) {
    t.p[r] = 1.0 / 3.0;
    t.alpha[r] = alpha[r];
    for (std::size_t u = 0; u < 4; ++u) t.pi[r][u] = pi[r][u];
  }
  t.delta[1] = {0.8, 0.7, 0.6, 0.5};
  t.delta[0] = {0.5, 0.3, 0.1, 0.2};
  return t;
}

// Printed P(Z=z, S=s, Y=y | R=r), columns (s,y) = 11, 10, 01, 00.
inline psace::CellProbabilities printed_table() {
  const double z1[3][4] = {{0.248, 0.072, 0.044, 0.036}, {0.250, 0.100, 0.085, 0.065}, {0.090, 0.030, 0.276, 0.204}};
  const double z0[3][4] = {{0.192, 0.228, 0.042, 0.138}, {0.035, 0.065, 0.100, 0.300}, {0.036, 0.084, 0.036, 0.244}};
  psace::CellProbabilities out(3);
  const int sy[4][2] = {{1, 1}, {1, 0}, {0, 1}, {0, 0}};
  for (std::size_t r = 0; r < 3; ++r)
    for (int k = 0; k < 4; ++k) {
      out(1, sy[k][0], sy[k][1], r) = z1[r][k];
      out(0, sy[k][0], sy[k][1], r) = z0[r][k];
    }
  return out;
}

// The printed table times `scale`, rounded, as counts.
inline psace::ObservedCounts printed_counts(double scale = 1000.0) {
  const psace::CellProbabilities t = printed_table();
  psace::ObservedCounts out(3);
  for (std::size_t i = 0; i < t.data().size(); ++i) out.data()[i] = std::llround(t.data()[i] * scale);
  return out;
}

template <class T>
psace::CountTable<T> scaled(const psace::CellProbabilities& probs, double scale) {
  psace::CountTable<T> out(probs.n_trials());
  for (std::size_t i = 0; i < probs.data().size(); ++i) {
    if constexpr (std::is_integral_v<T>)
      out.data()[i] = std::llround(probs.data()[i] * scale);
    else
      out.data()[i] = probs.data()[i] * scale;
  }
  return out;
}

// Grid oracle: ACE_u range as the union over a grid of pi_SbarS of
// the mixture bounds for the two observed cells holding u.
inline psace::Interval grid_oracle(const psace::TrialDistribution& d, psace::Stratum u, bool monotone, int points) {
  const double p11 = d.P[1][1], p10 = d.P[1][0], p01 = d.P[0][1];
  double lo_t = 0.0, hi_t = 0.0;
  if (!monotone) {
    lo_t = std::max(0.0, p01 - p11);
    hi_t = std::min(p01, p10);
  }
  auto delta_range = [](double mass, double cell, double success, double& a, double& b) {
    if (!(mass > 0.0) || mass > cell * (1.0 + 1e-12)) return false;
    const double q = success / cell;  // success rate in the cell
    const double w = std::min(1.0, mass / cell);
    a = std::max(0.0, (q - (1.0 - w)) / w);
    b = std::min(1.0, q / w);
    return true;
  };
  double best_lo = 2.0, best_hi = -2.0;
  for (int i = 0; i <= points; ++i) {
    const double t = points == 0 ? lo_t : lo_t + (hi_t - lo_t) * i / points;
    double mass = 0.0;
    int s1 = 0, s0 = 0;
    switch (u) {
      case psace::Stratum::SS: mass = p01 - t, s1 = 1, s0 = 1; break;
      case psace::Stratum::SSbar: mass = p11 - p01 + t, s1 = 1, s0 = 0; break;
      case psace::Stratum::SbarSbar: mass = p10 - t, s1 = 0, s0 = 0; break;
      case psace::Stratum::SbarS: mass = t, s1 = 0, s0 = 1; break;
    }
    double a1, b1, a0, b0;
    if (!delta_range(mass, d.P[1][s1], d.omega[1][s1][1], a1, b1) ||
        !delta_range(mass, d.P[0][s0], d.omega[0][s0][1], a0, b0)) {
      best_lo = -1.0, best_hi = 1.0;
      continue;
    }
    best_lo = std::min(best_lo, a1 - b0);
    best_hi = std::max(best_hi, b1 - a0);
    if (monotone) break;
  }
  return {std::max(-1.0, best_lo), std::min(1.0, best_hi)};
}

}  // namespace fixtures
