#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/error.hpp"
#include "psace/model.hpp"
#include "psace/parallel.hpp"
#include "psace/parameters.hpp"
#include "psace/prior.hpp"
#include "psace/rng.hpp"
#include "psace/stratum.hpp"

namespace psace {

struct EmOptions {
  bool monotone = true;
  double tolerance = 1e-8;  // absolute log-likelihood increment
  std::size_t max_iter = 10000;
  std::size_t n_starts = 20;  // random starts, in addition to the barycenter
  std::uint64_t seed = 1;
};

struct EmResult {
  ParameterSet params;
  double log_likelihood = kNegInf;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  std::vector<std::string> warnings;
  std::vector<double> start_log_likelihoods;  // final value reached from each start
  std::size_t best_start = 0;                 // 0 is the barycenter
};

/// Expected complete-data table given the observed counts and current
/// parameters. Each observed cell's count is split between its compatible
/// strata in proportion to pi_ur * delta_zu^y (1 - delta_zu)^(1-y).
template <class T>
ExpectedCounts e_step(const CountTable<T>& counts, const ParameterSet& params,
                      std::vector<std::string>* warnings = nullptr) {
  if (counts.n_trials() != params.n_trials())
    throw Error(ErrorCode::parameter_domain, "count table and parameters disagree on N_R");
  ExpectedCounts out(counts.n_trials());
  std::size_t equal_splits = 0;
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 0; z < 2; ++z)
      for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) {
          const double n = static_cast<double>(counts(z, s, y, r));
          if (n == 0.0) continue;
          const auto pair = compatible_strata(z, s);
          if (num_compatible(z, s, params.monotone) == 1) {
            out(z, pair.first, y, r) += n;
            continue;
          }
          const double wa = component_weight(params, z, pair.first, y, r);
          const double wb = component_weight(params, z, pair.second, y, r);
          double share = 0.5;
          if (wa + wb > 0.0)
            share = wa / (wa + wb);
          else
            ++equal_splits;
          out(z, pair.first, y, r) += n * share;
          out(z, pair.second, y, r) += n * (1.0 - share);
        }
  if (equal_splits > 0 && warnings)
    warnings->push_back(std::to_string(equal_splits) +
                        " cell(s) had zero weight on both compatible strata; split equally");
  return out;
}

/// Closed-form maximiser of the complete-data likelihood. Ratios with a zero
/// denominator keep the value from `previous` and are reported in `frozen`.
inline ParameterSet m_step(const ExpectedCounts& expected, const ParameterSet& previous,
                           std::vector<std::string>* frozen = nullptr) {
  const std::size_t n_trials = expected.n_trials();
  if (previous.n_trials() != n_trials)
    throw Error(ErrorCode::parameter_domain, "expected table and parameters disagree on N_R");
  for (double v : expected.data())
    if (v < 0.0) throw Error(ErrorCode::parameter_domain, "negative expected count");
  auto flag = [&](const std::string& what) {
    if (frozen) frozen->push_back(what);
  };

  ParameterSet next = previous;
  const double total = expected.total();
  for (std::size_t r = 0; r < n_trials; ++r) {
    const double n_r = expected.trial_total(r);
    if (total > 0.0)
      next.p[r] = n_r / total;
    else
      flag("p_" + std::to_string(r + 1));
    if (n_r > 0.0) {
      next.alpha[r] = expected.arm_total(1, r) / n_r;
      for (Stratum u : active_strata(previous.monotone))
        next.pi_of(u, r) = expected.stratum_total(u, r) / n_r;
    } else {
      flag("alpha_" + std::to_string(r + 1));
      flag("pi_" + std::to_string(r + 1));
    }
    if (previous.monotone) next.pi_of(Stratum::SbarS, r) = 0.0;
  }
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(previous.monotone)) {
      const double n1 = expected.outcome_total(z, u, 1);
      const double n0 = expected.outcome_total(z, u, 0);
      if (n1 + n0 > 0.0)
        next.delta_of(z, u) = n1 / (n1 + n0);
      else
        flag("delta_" + std::to_string(z) + "," + std::string(name(u)));
    }
  return next;
}

namespace detail {

/// Observed log-likelihood without re-validating; EM iterates stay in the
/// parameter space by construction.
template <class T>
double em_log_likelihood(const CountTable<T>& counts, const ParameterSet& params) {
  double ll = 0.0;
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 0; z < 2; ++z) {
      const double arm = params.p[r] * (z == 1 ? params.alpha[r] : 1.0 - params.alpha[r]);
      for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) {
          ll += xlogp(static_cast<double>(counts(z, s, y, r)), arm * conditional_cell(params, z, s, y, r));
          if (ll == kNegInf) return kNegInf;
        }
    }
  return ll;
}

}  // namespace detail

/// EM from a single starting point.
template <class T>
EmResult run_em_from(const CountTable<T>& counts, ParameterSet start, double tolerance,
                     std::size_t max_iter) {
  validate(start);
  EmResult result;
  result.params = std::move(start);
  double ll = detail::em_log_likelihood(counts, result.params);
  result.trace.push_back(ll);
  std::vector<std::string> frozen;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const ExpectedCounts expected = e_step(counts, result.params, &result.warnings);
    result.params = m_step(expected, result.params, &frozen);
    const double next = detail::em_log_likelihood(counts, result.params);
    result.trace.push_back(next);
    result.iterations = it + 1;
    const bool done = std::abs(next - ll) < tolerance || (next == kNegInf && ll == kNegInf);
    ll = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.log_likelihood = ll;
  if (!frozen.empty()) {
    std::sort(frozen.begin(), frozen.end());
    frozen.erase(std::unique(frozen.begin(), frozen.end()), frozen.end());
    std::string list;
    for (const auto& f : frozen) list += (list.empty() ? "" : ", ") + f;
    result.warnings.push_back("frozen at previous value (zero denominator): " + list);
  }
  std::sort(result.warnings.begin(), result.warnings.end());
  result.warnings.erase(std::unique(result.warnings.begin(), result.warnings.end()),
                        result.warnings.end());
  if (!result.converged)
    result.warnings.push_back("EM stopped at max_iter=" + std::to_string(max_iter) +
                              " without meeting the tolerance");
  return result;
}

/// Multi-start EM: the barycenter plus `n_starts` random starts drawn
/// uniformly on the simplices. Returns the highest-likelihood run.
template <class T>
EmResult run_em(const CountTable<T>& counts, const EmOptions& options) {
  const std::size_t n_trials = counts.n_trials();
  if (n_trials == 0) throw Error(ErrorCode::precondition, "EM needs at least one trial");
  std::vector<std::string> notes;
  if (options.monotone && n_trials < 2)
    notes.push_back("N_R < 2 under monotonicity: parameters are not identified");
  if (!options.monotone && n_trials < 3)
    notes.push_back("N_R < 3 without monotonicity: parameters are not identified");

  const RngStream root = RngStream::from_seed(options.seed).split("em");
  const std::size_t total = options.n_starts + 1;
  std::vector<EmResult> runs(total);
  parallel_for(total, [&](std::size_t i) {
    ParameterSet start = barycenter(n_trials, options.monotone);
    if (i > 0) {
      RngStream rng = root.split(i);
      start = sample_flat_prior(n_trials, options.monotone, rng);
    }
    runs[i] = run_em_from(counts, std::move(start), options.tolerance, options.max_iter);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i)
    if (runs[i].log_likelihood > runs[best].log_likelihood) best = i;
  std::vector<double> finals;
  for (const auto& run : runs) finals.push_back(run.log_likelihood);
  EmResult result = std::move(runs[best]);
  result.best_start = best;
  result.start_log_likelihoods = std::move(finals);
  result.warnings.insert(result.warnings.begin(), notes.begin(), notes.end());
  return result;
}

}  // namespace psace
