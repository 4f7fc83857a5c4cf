#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/error.hpp"
#include "psace/model.hpp"
#include "psace/parallel.hpp"
#include "psace/rng.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Range of the component success probability p1 in X0 ~ a X1 + (1-a) X2,
/// given the mixture's success probability p0 and the weight a > 0.
inline Interval mixture_component_bounds(double p0, double weight) {
  if (!(weight > 0.0) || weight > 1.0)
    throw Error(ErrorCode::undefined_component, "mixing weight must lie in (0, 1]");
  return {std::max(0.0, 1.0 - (1.0 - p0) / weight), std::min(1.0, p0 / weight)};
}

struct MixtureBounds {
  Interval first;                 // component with weight alpha
  std::optional<Interval> second; // component with weight 1 - alpha; absent when alpha = 1
};

inline MixtureBounds mixture_bounds(double p0, double alpha) {
  MixtureBounds out{mixture_component_bounds(p0, alpha), std::nullopt};
  if (alpha < 1.0) out.second = mixture_component_bounds(p0, 1.0 - alpha);
  return out;
}

struct StratumBounds {
  Stratum stratum = Stratum::SS;
  double lower = -1.0;
  double upper = 1.0;
  bool informative = false;
  double ci_lower = std::numeric_limits<double>::quiet_NaN();
  double ci_upper = std::numeric_limits<double>::quiet_NaN();
};

struct BoundsResult {
  std::size_t trial = 0;  // 0-based
  bool monotone = false;
  std::vector<StratumBounds> strata;
  std::size_t replicates = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  const StratumBounds& at(Stratum u) const {
    for (const auto& b : strata)
      if (b.stratum == u) return b;
    throw Error(ErrorCode::absent_stratum, "no bounds for stratum " + std::string(name(u)));
  }
};

namespace detail {

inline StratumBounds vacuous(Stratum u) { return {u, -1.0, 1.0, false}; }

/// Bounds on delta for a stratum of mass `mass` inside the observed cell
/// with probability `cell` and success mass `success` (= Q * P).
inline std::optional<Interval> component(double mass, double cell, double success) {
  if (!(mass > 0.0) || mass > cell * (1.0 + 1e-12)) return std::nullopt;
  if (mass >= cell) return Interval{success / cell, success / cell};
  return Interval{std::max(0.0, 1.0 - (cell - success) / mass), std::min(1.0, success / mass)};
}

/// ACE = delta_1 - delta_0 bounds from a treated cell (z=1, s1) and a control
/// cell (z=0, s0), both containing the stratum with the given mass.
inline StratumBounds ace_bounds(const TrialDistribution& d, Stratum u, double mass, int s_treated,
                                int s_control) {
  const auto treated = component(mass, d.P[1][s_treated], d.omega[1][s_treated][1]);
  const auto control = component(mass, d.P[0][s_control], d.omega[0][s_control][1]);
  if (!treated || !control) return vacuous(u);
  StratumBounds b{u, treated->lower - control->upper, treated->upper - control->lower, true};
  b.informative = b.lower > -1.0 || b.upper < 1.0;
  b.lower = std::clamp(b.lower, -1.0, 1.0);
  b.upper = std::clamp(b.upper, -1.0, 1.0);
  return b;
}

/// Bounds for stratum u when pi_SbarS,r = t; shared by the closed forms.
inline StratumBounds conditional_bounds(const TrialDistribution& d, Stratum u, double t) {
  const double p11 = d.P[1][1];
  const double p10 = d.P[1][0];
  const double p01 = d.P[0][1];
  switch (u) {
    case Stratum::SS: return ace_bounds(d, u, p01 - t, 1, 1);
    case Stratum::SSbar: return ace_bounds(d, u, p11 - p01 + t, 1, 0);
    case Stratum::SbarSbar: return ace_bounds(d, u, p10 - t, 0, 0);
    case Stratum::SbarS: return ace_bounds(d, u, t, 0, 1);
  }
  return vacuous(u);
}

inline StratumBounds monotone_stratum(const TrialDistribution& d, Stratum u) {
  return conditional_bounds(d, u, 0.0);
}

/// Each stratum's mass is monotone in pi_SbarS,r and the mixture bounds widen
/// as the mass shrinks, so the extremes over the feasible range sit at the
/// endpoint where that stratum is smallest.
inline StratumBounds nonmonotone_stratum(const TrialDistribution& d, Stratum u) {
  const double p11 = d.P[1][1];
  const double p10 = d.P[1][0];
  const double p01 = d.P[0][1];
  const double t_min = std::max(0.0, p01 - p11);
  const double t_max = std::min(p01, p10);
  switch (u) {
    case Stratum::SS:
    case Stratum::SbarSbar: return conditional_bounds(d, u, t_max);
    case Stratum::SSbar:
    case Stratum::SbarS: return conditional_bounds(d, u, t_min);
  }
  return vacuous(u);
}

inline std::vector<StratumBounds> trial_bounds(const TrialDistribution& d, bool monotone) {
  std::vector<StratumBounds> out;
  for (Stratum u : active_strata(monotone))
    out.push_back(monotone ? monotone_stratum(d, u) : nonmonotone_stratum(d, u));
  return out;
}

}  // namespace detail

/// Sharp bounds for ACE_SS,r, ACE_SSbar,r, ACE_SbarSbar,r under monotonicity.
/// Strata whose mass is zero (or exceeds its observed cell, i.e. the trial
/// contradicts monotonicity) come back as [-1, 1] with informative = false.
inline BoundsResult psace_bounds_monotone(const ObservedDistribution& dist, std::size_t r) {
  BoundsResult out;
  out.trial = r;
  out.monotone = true;
  out.strata = detail::trial_bounds(dist.trial(r), true);
  if (dist.P(0, 1, r) > dist.P(1, 1, r))
    out.warnings.push_back("trial " + std::to_string(r + 1) +
                           ": P(S=1|Z=0) exceeds P(S=1|Z=1), incompatible with monotonicity");
  return out;
}

/// Sharp bounds for all four strata without monotonicity: the conditional
/// bounds given pi_SbarS,r, optimised over its feasible range
/// [max(0, P01 - P11), min(P01, P10)].
inline BoundsResult psace_bounds_nonmonotone(const ObservedDistribution& dist, std::size_t r) {
  BoundsResult out;
  out.trial = r;
  out.monotone = false;
  out.strata = detail::trial_bounds(dist.trial(r), false);
  return out;
}

inline BoundsResult psace_bounds(const ObservedDistribution& dist, std::size_t r, bool monotone) {
  return monotone ? psace_bounds_monotone(dist, r) : psace_bounds_nonmonotone(dist, r);
}

/// Percentile-bootstrap intervals for the bounds of one trial. Units are
/// resampled within each (z, r) arm with the arm size held fixed. The naive
/// bootstrap can be inconsistent for partially identified parameters; the
/// intervals are descriptive.
inline BoundsResult bootstrap_bounds(const ObservedCounts& counts, std::size_t r, bool monotone,
                                     std::size_t replicates, std::uint64_t seed) {
  if (replicates < 1) throw Error(ErrorCode::precondition, "bootstrap needs at least one replicate");
  if (r >= counts.n_trials()) throw Error(ErrorCode::precondition, "trial index out of range");
  const ObservedDistribution dist = observed_distribution(counts);
  BoundsResult result = psace_bounds(dist, r, monotone);
  result.replicates = replicates;

  const RngStream root = RngStream::from_seed(seed).split("bootstrap").split(r);
  std::vector<std::optional<std::vector<StratumBounds>>> draws(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    RngStream rng = root.split(b);
    TrialDistribution d;
    for (int z = 0; z < 2; ++z) {
      const std::int64_t arm = counts.arm_total(z, r);
      if (arm == 0) return;
      const std::array<double, 4> probs{
          static_cast<double>(counts(z, 1, 1, r)), static_cast<double>(counts(z, 1, 0, r)),
          static_cast<double>(counts(z, 0, 1, r)), static_cast<double>(counts(z, 0, 0, r))};
      const auto n = sample_multinomial(arm, probs, rng);
      const double total = static_cast<double>(arm);
      d.omega[z][1][1] = static_cast<double>(n[0]) / total;
      d.omega[z][1][0] = static_cast<double>(n[1]) / total;
      d.omega[z][0][1] = static_cast<double>(n[2]) / total;
      d.omega[z][0][0] = static_cast<double>(n[3]) / total;
      for (int s = 0; s < 2; ++s) d.P[z][s] = d.omega[z][s][1] + d.omega[z][s][0];
    }
    draws[b] = detail::trial_bounds(d, monotone);
  });

  const std::size_t k = result.strata.size();
  std::vector<std::vector<double>> lowers(k), uppers(k);
  for (const auto& draw : draws) {
    if (!draw) {
      ++result.skipped;
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      lowers[i].push_back((*draw)[i].lower);
      uppers[i].push_back((*draw)[i].upper);
    }
  }
  if (result.skipped * 10 > replicates)
    result.warnings.push_back(std::to_string(result.skipped) + " of " + std::to_string(replicates) +
                              " bootstrap replicates skipped (empty arm)");
  if (result.skipped < replicates)
    for (std::size_t i = 0; i < k; ++i) {
      result.strata[i].ci_lower = quantile(lowers[i], 0.025);
      result.strata[i].ci_upper = quantile(uppers[i], 0.975);
    }
  return result;
}

}  // namespace psace
