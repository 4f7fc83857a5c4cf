#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/em.hpp"
#include "psace/error.hpp"
#include "psace/model.hpp"
#include "psace/parallel.hpp"
#include "psace/parameters.hpp"
#include "psace/posterior.hpp"
#include "psace/prior.hpp"
#include "psace/rng.hpp"

namespace psace {

/// Log-likelihood of the unconstrained multinomial at its MLE N_c / N.
template <class T>
double saturated_log_likelihood(const CountTable<T>& counts) {
  const double total = static_cast<double>(counts.total());
  if (!(total > 0.0)) throw Error(ErrorCode::precondition, "saturated model needs a positive total");
  double ll = 0.0;
  for (T c : counts.data()) {
    const double n = static_cast<double>(c);
    ll += xlogp(n, n / total);
  }
  return ll;
}

/// (8 N_R - 1) free frequencies minus the model's free parameters:
/// 4 N_R - 6 under monotonicity, 3 N_R - 8 otherwise. May be <= 0.
constexpr long degrees_of_freedom(std::size_t n_trials, bool monotone) {
  const long n = static_cast<long>(n_trials);
  return monotone ? 4 * n - 6 : 3 * n - 8;
}

inline double chi_square_upper_tail(double statistic, long df) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * statistic);
}

struct GofReport {
  bool monotone = true;
  double statistic = 0.0;
  long df = 0;
  double p_value = 1.0;
  double model_log_likelihood = 0.0;
  double saturated_log_likelihood = 0.0;
  std::optional<double> ppp;
  std::optional<std::size_t> n_rep;
  std::vector<std::string> warnings;
};

/// Likelihood-ratio test of the structured model against the saturated one.
/// T = 2 (l_sat - l_model) with chi-square(df) reference.
inline GofReport lrt(const ObservedCounts& counts, bool monotone, EmOptions em = {}) {
  const long df = degrees_of_freedom(counts.n_trials(), monotone);
  if (df <= 0)
    throw Error(ErrorCode::untestable_model,
                std::string(monotone ? "monotone" : "nonmonotone") + " model with N_R = " +
                    std::to_string(counts.n_trials()) + " has df = " + std::to_string(df) +
                    "; the model is saturated or over-parameterised and cannot be tested");
  em.monotone = monotone;
  const EmResult fit = run_em(counts, em);
  GofReport report;
  report.monotone = monotone;
  report.df = df;
  report.model_log_likelihood = fit.log_likelihood;
  report.saturated_log_likelihood = saturated_log_likelihood(counts);
  double t = 2.0 * (report.saturated_log_likelihood - fit.log_likelihood);
  if (t < 0.0) {
    if (t < -1e-6) report.warnings.push_back("negative LR statistic " + std::to_string(t) + " clamped to 0");
    t = 0.0;
  }
  report.statistic = t;
  report.p_value = chi_square_upper_tail(t, df);
  if (!fit.converged) report.warnings.push_back("EM did not converge; statistic is an upper bound");
  return report;
}

// ---------------------------------------------------------------------------
// Posterior predictive checks

enum class Discrepancy {
  realized,  // T(N, theta) = 2 [l_sat(N) - l(N; theta)] at each posterior draw
  refit,     // T(N) = LR statistic with the model refitted by EM on each table
};

struct PppOptions {
  std::size_t n_rep = 500;
  Discrepancy discrepancy = Discrepancy::realized;
  std::size_t refit_restarts = 5;
  std::uint64_t seed = 1;
};

struct PppResult {
  double ppp = 0.0;
  std::size_t n_rep = 0;
  std::size_t dropped = 0;
  Discrepancy discrepancy = Discrepancy::realized;
  std::vector<std::string> warnings;
};

namespace detail {

template <class T>
double realized_discrepancy(const CountTable<T>& counts, const ParameterSet& params) {
  return 2.0 * (saturated_log_likelihood(counts) - observed_log_likelihood(counts, params));
}

/// LR statistic with EM warm-started at `warm` plus random restarts.
inline std::optional<double> refit_discrepancy(const ObservedCounts& counts, const ParameterSet& warm,
                                               std::size_t restarts, RngStream rng) {
  EmResult best = run_em_from(counts, warm, 1e-8, 10000);
  for (std::size_t i = 0; i < restarts; ++i) {
    EmResult run = run_em_from(counts, sample_flat_prior(counts.n_trials(), warm.monotone, rng), 1e-8, 10000);
    if (run.log_likelihood > best.log_likelihood) best = std::move(run);
  }
  if (!best.converged) return std::nullopt;
  return std::max(0.0, 2.0 * (saturated_log_likelihood(counts) - best.log_likelihood));
}

}  // namespace detail

/// Replicate table of the same total size drawn from the joint cell
/// probabilities, so the R and Z margins are regenerated too.
template <UniformSource Rng>
ObservedCounts replicate_counts(const ParameterSet& params, std::int64_t total, Rng& rng) {
  const CellProbabilities probs = cell_probabilities(params);
  const std::vector<std::int64_t> draw = sample_multinomial(total, probs.data(), rng);
  ObservedCounts out(params.n_trials());
  std::copy(draw.begin(), draw.end(), out.data().begin());
  return out;
}

/// Posterior predictive p-value: the posterior probability that a replicate
/// table is more discrepant than the observed one, P(T_rep > T_obs), ties
/// counted 1/2. Small values indicate misfit. Replicates use n_rep draws
/// spaced evenly through the pooled chains.
inline PppResult posterior_predictive_p(const ObservedCounts& counts, const PosteriorDraws& draws,
                                        const PppOptions& options) {
  const std::size_t available = draws.total_draws();
  if (available == 0) throw Error(ErrorCode::precondition, "no posterior draws");
  if (options.n_rep == 0 || options.n_rep > available)
    throw Error(ErrorCode::precondition, "n_rep must lie in [1, number of draws]");
  const bool monotone = draws.meta().monotone;
  const std::int64_t total = counts.total();

  std::vector<std::pair<std::size_t, std::size_t>> picks;
  {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t c = 0; c < draws.n_chains(); ++c)
      for (std::size_t i = 0; i < draws.draws_per_chain(c); ++i) all.emplace_back(c, i);
    for (std::size_t k = 0; k < options.n_rep; ++k) picks.push_back(all[k * available / options.n_rep]);
  }

  std::optional<double> observed_refit;
  if (options.discrepancy == Discrepancy::refit) {
    EmOptions em;
    em.monotone = monotone;
    em.n_starts = options.refit_restarts;
    em.seed = options.seed;
    const EmResult fit = run_em(counts, em);
    observed_refit = std::max(0.0, 2.0 * (saturated_log_likelihood(counts) - fit.log_likelihood));
  }

  const RngStream root = RngStream::from_seed(options.seed).split("ppp");
  std::vector<double> score(options.n_rep, -1.0);  // 1, 0.5, 0, or -1 when dropped
  parallel_for(options.n_rep, [&](std::size_t k) {
    RngStream rng = root.split(k);
    const ParameterSet theta = draws.draw(picks[k].first, picks[k].second);
    const ObservedCounts rep = replicate_counts(theta, total, rng);
    double t_obs = 0.0, t_rep = 0.0;
    if (options.discrepancy == Discrepancy::realized) {
      t_obs = detail::realized_discrepancy(counts, theta);
      t_rep = detail::realized_discrepancy(rep, theta);
    } else {
      const auto t = detail::refit_discrepancy(rep, theta, options.refit_restarts, rng.split("refit"));
      if (!t) return;
      t_obs = *observed_refit;
      t_rep = *t;
    }
    score[k] = t_rep > t_obs ? 1.0 : (t_rep == t_obs ? 0.5 : 0.0);
  });

  PppResult out;
  out.discrepancy = options.discrepancy;
  double sum = 0.0;
  for (double s : score) {
    if (s < 0.0) {
      ++out.dropped;
      continue;
    }
    sum += s;
    ++out.n_rep;
  }
  if (out.n_rep == 0) throw Error(ErrorCode::numerical, "every replicate was dropped");
  out.ppp = sum / static_cast<double>(out.n_rep);
  if (out.dropped * 10 > options.n_rep)
    out.warnings.push_back(std::to_string(out.dropped) + " of " + std::to_string(options.n_rep) +
                           " replicates dropped (EM did not converge)");
  return out;
}

}  // namespace psace
