#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "psace/error.hpp"
#include "psace/stratum.hpp"

namespace psace {

using StratumProbs = std::array<double, kNumStrata>;

/// Model parameters (p, alpha, pi, delta). Under monotonicity pi[r][SbarS]
/// is zero and delta[z][SbarS] is unused.
struct ParameterSet {
  bool monotone = false;
  std::vector<double> p;
  std::vector<double> alpha;
  std::vector<StratumProbs> pi;
  std::array<StratumProbs, 2> delta{};  // delta[z][u]

  ParameterSet() = default;
  ParameterSet(std::size_t n_trials, bool is_monotone)
      : monotone(is_monotone), p(n_trials, 0.0), alpha(n_trials, 0.0), pi(n_trials, StratumProbs{}) {}

  std::size_t n_trials() const { return p.size(); }

  double ace(Stratum u) const { return delta[1][index(u)] - delta[0][index(u)]; }

  double& pi_of(Stratum u, std::size_t r) { return pi[r][index(u)]; }
  double pi_of(Stratum u, std::size_t r) const { return pi[r][index(u)]; }
  double& delta_of(int z, Stratum u) { return delta[z][index(u)]; }
  double delta_of(int z, Stratum u) const { return delta[z][index(u)]; }

  /// Number of free parameters: 4N_R+5 (monotone) or 5N_R+7.
  std::size_t n_free() const {
    const std::size_t n = n_trials();
    return monotone ? 4 * n + 5 : 5 * n + 7;
  }
};

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kSilentRenormalize = 1e-12;

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::parameter_domain, what);
}

inline bool in_unit(double x, double tol) { return x >= -tol && x <= 1.0 + tol; }

}  // namespace detail

/// Throws a parameter-domain error unless the invariants hold within 1e-9.
inline void validate(const ParameterSet& params) {
  using detail::require;
  const std::size_t n = params.n_trials();
  require(n > 0, "parameter set has no trials");
  require(params.alpha.size() == n && params.pi.size() == n, "parameter vectors disagree on N_R");
  double p_sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    require(detail::in_unit(params.p[r], kSimplexTolerance), "p_r outside [0,1]");
    require(detail::in_unit(params.alpha[r], kSimplexTolerance), "alpha_r outside [0,1]");
    p_sum += params.p[r];
    double pi_sum = 0.0;
    for (Stratum u : kAllStrata) {
      const double v = params.pi_of(u, r);
      require(detail::in_unit(v, kSimplexTolerance), "pi_ur outside [0,1]");
      pi_sum += v;
    }
    require(std::abs(pi_sum - 1.0) <= kSimplexTolerance,
            "pi for trial " + std::to_string(r + 1) + " does not sum to 1");
    if (params.monotone)
      require(params.pi_of(Stratum::SbarS, r) == 0.0, "monotone model with nonzero pi_SbarS");
  }
  require(std::abs(p_sum - 1.0) <= kSimplexTolerance, "p does not sum to 1");
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(params.monotone))
      require(detail::in_unit(params.delta_of(z, u), kSimplexTolerance), "delta_zu outside [0,1]");
}

/// Rescales simplex blocks whose sums are off by at most 1e-12; larger
/// discrepancies are left alone for validate() to reject.
inline void renormalize(ParameterSet& params) {
  auto fix = [](auto first, auto last) {
    const double s = std::accumulate(first, last, 0.0);
    if (s > 0.0 && std::abs(s - 1.0) <= kSilentRenormalize)
      for (auto it = first; it != last; ++it) *it /= s;
  };
  fix(params.p.begin(), params.p.end());
  for (auto& row : params.pi) fix(row.begin(), row.end());
}

/// Per-stratum and per-trial causal-effect summary of a parameter set.
struct PsaceSummary {
  bool monotone = false;
  StratumProbs ace_u{};  // NaN for SbarS under monotonicity
  std::vector<double> ace_s_r;
  std::vector<double> ace_y_r;
};

inline PsaceSummary summarize_psace(const ParameterSet& params) {
  PsaceSummary out;
  out.monotone = params.monotone;
  for (Stratum u : kAllStrata) out.ace_u[index(u)] = std::numeric_limits<double>::quiet_NaN();
  for (Stratum u : active_strata(params.monotone)) out.ace_u[index(u)] = params.ace(u);
  const std::size_t n = params.n_trials();
  out.ace_s_r.resize(n);
  out.ace_y_r.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.ace_s_r[r] = params.pi_of(Stratum::SSbar, r) - params.pi_of(Stratum::SbarS, r);
    double ace_y = 0.0;
    for (Stratum u : active_strata(params.monotone)) ace_y += params.ace(u) * params.pi_of(u, r);
    out.ace_y_r[r] = ace_y;
  }
  return out;
}

/// Uniform proportions and delta = 1/2: the centre of the parameter space.
inline ParameterSet barycenter(std::size_t n_trials, bool monotone) {
  ParameterSet params(n_trials, monotone);
  const double k = static_cast<double>(num_active_strata(monotone));
  for (std::size_t r = 0; r < n_trials; ++r) {
    params.p[r] = 1.0 / static_cast<double>(n_trials);
    params.alpha[r] = 0.5;
    for (Stratum u : active_strata(monotone)) params.pi_of(u, r) = 1.0 / k;
  }
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(monotone)) params.delta_of(z, u) = 0.5;
  return params;
}

}  // namespace psace
