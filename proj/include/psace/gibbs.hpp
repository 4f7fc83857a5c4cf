#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/error.hpp"
#include "psace/model.hpp"
#include "psace/parallel.hpp"
#include "psace/parameters.hpp"
#include "psace/posterior.hpp"
#include "psace/prior.hpp"
#include "psace/rng.hpp"
#include "psace/stratum.hpp"

namespace psace {

struct GibbsOptions {
  bool monotone = true;
  std::size_t iterations = 20000;  // including burn-in
  std::size_t burn_in = 4000;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
};

/// Draws the latent strata for every unit, cell by cell. Within an ambiguous
/// (z, s, y, r) cell the units are exchangeable, so the number assigned to
/// the first compatible stratum is Binomial(N, odds) with odds proportional
/// to pi_ur delta_zu^y (1 - delta_zu)^(1-y).
template <UniformSource Rng>
CompleteCounts impute_strata(const ObservedCounts& counts, const ParameterSet& params, Rng& rng,
                             std::size_t* equal_draws = nullptr) {
  if (counts.n_trials() != params.n_trials())
    throw Error(ErrorCode::parameter_domain, "count table and parameters disagree on N_R");
  CompleteCounts out(counts.n_trials());
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 0; z < 2; ++z)
      for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) {
          const std::int64_t n = counts(z, s, y, r);
          if (n == 0) continue;
          const auto pair = compatible_strata(z, s);
          if (num_compatible(z, s, params.monotone) == 1) {
            out(z, pair.first, y, r) += n;
            continue;
          }
          const double wa = component_weight(params, z, pair.first, y, r);
          const double wb = component_weight(params, z, pair.second, y, r);
          double prob = 0.5;
          if (wa + wb > 0.0)
            prob = wa / (wa + wb);
          else if (equal_draws)
            ++*equal_draws;
          const std::int64_t k = sample_binomial(n, prob, rng);
          out(z, pair.first, y, r) += k;
          out(z, pair.second, y, r) += n - k;
        }
  return out;
}

/// One draw from the complete-data posterior under flat Dirichlet/Beta priors.
template <UniformSource Rng>
ParameterSet draw_parameters(const CompleteCounts& complete, bool monotone, Rng& rng) {
  const std::size_t n_trials = complete.n_trials();
  if (monotone)
    for (std::size_t r = 0; r < n_trials; ++r)
      if (complete.stratum_total(Stratum::SbarS, r) != 0)
        throw Error(ErrorCode::support, "complete counts in stratum SbarS under monotonicity");
  ParameterSet params(n_trials, monotone);
  std::vector<double> conc(n_trials);
  for (std::size_t r = 0; r < n_trials; ++r) conc[r] = static_cast<double>(complete.trial_total(r)) + 1.0;
  sample_dirichlet(std::span<const double>(conc), std::span<double>(params.p), rng);

  const std::size_t k = num_active_strata(monotone);
  std::vector<double> conc_u(k), draw(k);
  for (std::size_t r = 0; r < n_trials; ++r) {
    params.alpha[r] = sample_beta(static_cast<double>(complete.arm_total(1, r)) + 1.0,
                                  static_cast<double>(complete.arm_total(0, r)) + 1.0, rng);
    for (std::size_t i = 0; i < k; ++i)
      conc_u[i] = static_cast<double>(complete.stratum_total(active_strata(monotone)[i], r)) + 1.0;
    sample_dirichlet(std::span<const double>(conc_u), std::span<double>(draw), rng);
    for (std::size_t i = 0; i < k; ++i) params.pi_of(active_strata(monotone)[i], r) = draw[i];
  }
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(monotone))
      params.delta_of(z, u) = sample_beta(static_cast<double>(complete.outcome_total(z, u, 1)) + 1.0,
                                          static_cast<double>(complete.outcome_total(z, u, 0)) + 1.0, rng);
  return params;
}

struct GibbsResult {
  PosteriorDraws draws;
  std::vector<std::string> warnings;
};

/// Data-augmentation Gibbs sampler. Chain c uses the stream
/// seed/"gibbs"/#c and starts from a prior draw.
inline GibbsResult run_gibbs(const ObservedCounts& counts, const GibbsOptions& options) {
  if (options.chains < 1) throw Error(ErrorCode::precondition, "need at least one chain");
  if (options.iterations <= options.burn_in)
    throw Error(ErrorCode::precondition, "iterations must exceed burn_in");
  if (options.thin < 1) throw Error(ErrorCode::precondition, "thin must be at least 1");
  const std::size_t n_trials = counts.n_trials();

  PosteriorDraws::Meta meta{options.monotone, n_trials, options.chains, options.iterations,
                            options.burn_in, options.thin, options.seed};
  std::vector<PosteriorDraws> per_chain(options.chains);
  std::vector<std::size_t> equal(options.chains, 0);
  const RngStream root = RngStream::from_seed(options.seed).split("gibbs");

  parallel_for(options.chains, [&](std::size_t c) {
    PosteriorDraws::Meta one = meta;
    one.chains = 1;
    PosteriorDraws local(one);
    RngStream rng = root.split(c);
    ParameterSet params = sample_flat_prior(n_trials, options.monotone, rng);
    for (std::size_t it = 0; it < options.iterations; ++it) {
      const CompleteCounts complete = impute_strata(counts, params, rng, &equal[c]);
      params = draw_parameters(complete, options.monotone, rng);
      if (it >= options.burn_in && (it - options.burn_in) % options.thin == 0) local.push(0, params);
    }
    per_chain[c] = std::move(local);
  });

  GibbsResult result{PosteriorDraws(meta), {}};
  for (std::size_t c = 0; c < options.chains; ++c) {
    result.draws.append_chain(c, per_chain[c], 0);
    if (equal[c] > 0)
      result.warnings.push_back("chain " + std::to_string(c + 1) + ": " + std::to_string(equal[c]) +
                                " imputation(s) with zero odds on both strata; drawn with probability 1/2");
  }
  return result;
}

}  // namespace psace
