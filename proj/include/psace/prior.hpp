#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "psace/distributions.hpp"
#include "psace/parameters.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Draw from the flat prior: Dirichlet(1,...,1) for p and each pi_r,
/// Uniform(0,1) for alpha_r and every active delta_zu.
template <UniformSource Rng>
ParameterSet sample_flat_prior(std::size_t n_trials, bool monotone, Rng& rng) {
  ParameterSet params(n_trials, monotone);
  const std::vector<double> ones_r(n_trials, 1.0);
  sample_dirichlet(std::span<const double>(ones_r), std::span<double>(params.p), rng);
  const std::size_t k = num_active_strata(monotone);
  const std::vector<double> ones_u(k, 1.0);
  std::vector<double> draw(k);
  for (std::size_t r = 0; r < n_trials; ++r) {
    params.alpha[r] = rng.uniform_open();
    sample_dirichlet(std::span<const double>(ones_u), std::span<double>(draw), rng);
    for (std::size_t i = 0; i < k; ++i) params.pi[r][i] = draw[i];
  }
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(monotone)) params.delta_of(z, u) = rng.uniform_open();
  return params;
}

}  // namespace psace
