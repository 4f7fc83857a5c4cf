#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/error.hpp"
#include "psace/parallel.hpp"
#include "psace/posterior.hpp"
#include "psace/rng.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

inline constexpr double kMuBound = 5.0;

/// log(1 + e^{-x}) without overflow.
inline double log1p_exp_neg(double x) {
  return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

/// Unnormalised log full conditional of eta = logit(delta_zur) given n1
/// successes and n0 failures in the cell and the N(mu, sigma^2) prior.
inline double eta_log_density(double eta, double n1, double n0, double mu, double sigma) {
  const double d = eta - mu;
  return -n0 * eta - d * d / (2.0 * sigma * sigma) - (n1 + n0) * log1p_exp_neg(eta);
}

inline double eta_gradient(double eta, double n1, double n0, double mu, double sigma) {
  return n1 - (n1 + n0) * expit(eta) - (eta - mu) / (sigma * sigma);
}

/// Always negative: the full conditional is strictly log-concave.
inline double eta_curvature(double eta, double n1, double n0, double sigma) {
  const double e = expit(eta);
  return -1.0 / (sigma * sigma) - (n1 + n0) * e * (1.0 - e);
}

struct EtaMode {
  double mode = 0.0;
  double variance = 0.0;  // -1 / curvature at the mode
  bool bisected = false;  // Newton-Raphson did not converge in 100 steps
};

/// Mode of the eta full conditional: Newton-Raphson from mu, falling back to
/// bisection on the gradient over a bracket that always contains the root.
inline EtaMode eta_mode(double n1, double n0, double mu, double sigma, double start) {
  EtaMode out;
  double x = start;
  bool ok = false;
  for (int it = 0; it < 100; ++it) {
    const double step = eta_gradient(x, n1, n0, mu, sigma) / eta_curvature(x, n1, n0, sigma);
    if (!std::isfinite(step)) break;
    x -= step;
    if (std::abs(step) < 1e-10 * (1.0 + std::abs(x))) {
      ok = true;
      break;
    }
  }
  if (!ok || !std::isfinite(x)) {
    const double reach = sigma * sigma * (n1 + n0) + 1.0;
    double lo = mu - reach, hi = mu + reach;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (eta_gradient(mid, n1, n0, mu, sigma) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    x = 0.5 * (lo + hi);
    out.bisected = true;
  }
  out.mode = x;
  out.variance = -1.0 / eta_curvature(x, n1, n0, sigma);
  return out;
}

struct MisStep {
  double eta = 0.0;
  bool accepted = false;
  bool bisected = false;
};

/// Metropolised independence sampler step with a Normal proposal centred at
/// the full-conditional mode with the Laplace variance.
template <UniformSource Rng>
MisStep mis_step(double current, double n1, double n0, double mu, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::config, "sigma must be positive");
  const EtaMode m = eta_mode(n1, n0, mu, sigma, current);
  const double sd = std::sqrt(m.variance);
  const double proposal = sample_normal(m.mode, sd, rng);
  auto log_q = [&](double x) {
    const double z = (x - m.mode) / sd;
    return -0.5 * z * z;
  };
  const double log_ratio = eta_log_density(proposal, n1, n0, mu, sigma) - eta_log_density(current, n1, n0, mu, sigma) +
                           log_q(current) - log_q(proposal);
  MisStep out{current, false, m.bisected};
  if (log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio) {
    out.eta = proposal;
    out.accepted = true;
  }
  return out;
}

struct HierarchicalOptions {
  double sigma = 0.2;
  std::size_t iterations = 20000;
  std::size_t burn_in = 4000;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
};

/// Draws of the hierarchical model, flat per chain. A draw is packed as
/// p[N], alpha[N], pi[N][4], eta[2][4][N], mu[2][4].
class HierarchicalDraws {
 public:
  struct View {
    const double* d;
    std::size_t n;
    double p(std::size_t r) const { return d[r]; }
    double alpha(std::size_t r) const { return d[n + r]; }
    double pi(Stratum u, std::size_t r) const { return d[2 * n + 4 * r + index(u)]; }
    double eta(int z, Stratum u, std::size_t r) const {
      return d[6 * n + (static_cast<std::size_t>(z) * 4 + index(u)) * n + r];
    }
    double mu(int z, Stratum u) const { return d[14 * n + static_cast<std::size_t>(z) * 4 + index(u)]; }
    double delta(int z, Stratum u, std::size_t r) const { return expit(eta(z, u, r)); }
    double ace(Stratum u, std::size_t r) const { return delta(1, u, r) - delta(0, u, r); }
    /// Pooled effect on the mu scale: expit(mu_1u) - expit(mu_0u).
    double ace_mu(Stratum u) const { return expit(mu(1, u)) - expit(mu(0, u)); }
  };

  HierarchicalDraws() = default;
  HierarchicalDraws(std::size_t n_trials, std::size_t chains, HierarchicalOptions options)
      : n_(n_trials), options_(options), chains_(chains) {}

  std::size_t n_trials() const { return n_; }
  const HierarchicalOptions& options() const { return options_; }
  std::size_t n_chains() const { return chains_.size(); }
  std::size_t stride() const { return 14 * n_ + 8; }
  std::size_t draws_per_chain(std::size_t c) const { return chains_.at(c).size() / stride(); }
  View view(std::size_t c, std::size_t i) const { return {chains_.at(c).data() + i * stride(), n_}; }
  std::vector<double>& buffer(std::size_t c) { return chains_.at(c); }

  template <class F>
  std::vector<std::vector<double>> trace(F f) const {
    std::vector<std::vector<double>> out(n_chains());
    for (std::size_t c = 0; c < n_chains(); ++c)
      for (std::size_t i = 0; i < draws_per_chain(c); ++i) out[c].push_back(f(view(c, i)));
    return out;
  }

 private:
  std::size_t n_ = 0;
  HierarchicalOptions options_;
  std::vector<std::vector<double>> chains_;
};

struct HierarchicalResult {
  HierarchicalDraws draws;
  /// MIS acceptance rate per (z, u, r), indexed (z * 4 + u) * N + r, over
  /// post-burn-in iterations of all chains.
  std::vector<double> acceptance;
  std::size_t bisections = 0;
  std::size_t clamped_mu = 0;
  std::vector<std::string> warnings;

  double acceptance_at(int z, Stratum u, std::size_t r) const {
    return acceptance.at((static_cast<std::size_t>(z) * 4 + index(u)) * draws.n_trials() + r);
  }
  double min_acceptance() const { return *std::min_element(acceptance.begin(), acceptance.end()); }
};

/// Gibbs sampler for the hierarchical model without monotonicity:
/// logit delta_zur ~ N(mu_zu, sigma^2), mu_zu ~ U(-5, 5), sigma fixed.
inline HierarchicalResult run_hierarchical_gibbs(const ObservedCounts& counts, const HierarchicalOptions& options) {
  if (!(options.sigma > 0.0))
    throw Error(ErrorCode::config, "sigma must be positive; use the homogeneous sampler for sigma = 0");
  if (options.chains < 1) throw Error(ErrorCode::precondition, "need at least one chain");
  if (options.iterations <= options.burn_in) throw Error(ErrorCode::precondition, "iterations must exceed burn_in");
  if (options.thin < 1) throw Error(ErrorCode::precondition, "thin must be at least 1");
  const std::size_t n = counts.n_trials();
  const double sigma = options.sigma;
  const std::size_t cells = 8 * n;

  struct ChainOut {
    std::vector<double> buffer;
    std::vector<std::size_t> accepted;
    std::size_t proposals = 0;
    std::size_t bisections = 0;
    std::size_t clamped = 0;
  };
  std::vector<ChainOut> outs(options.chains);
  const RngStream root = RngStream::from_seed(options.seed).split("hierarchical");

  parallel_for(options.chains, [&](std::size_t c) {
    RngStream rng = root.split(c);
    ChainOut& out = outs[c];
    out.accepted.assign(cells, 0);
    std::vector<double> p(n), alpha(n), pi(4 * n), eta(cells), mu(8);
    {
      const std::vector<double> ones_r(n, 1.0), ones_u(4, 1.0);
      sample_dirichlet(std::span<const double>(ones_r), std::span<double>(p), rng);
      for (std::size_t r = 0; r < n; ++r) {
        alpha[r] = rng.uniform_open();
        sample_dirichlet(std::span<const double>(ones_u), std::span<double>(pi.data() + 4 * r, 4), rng);
      }
      for (std::size_t k = 0; k < 8; ++k) mu[k] = -kMuBound + 2.0 * kMuBound * rng.uniform();
      for (std::size_t k = 0; k < 8; ++k)
        for (std::size_t r = 0; r < n; ++r) eta[k * n + r] = sample_normal(mu[k], sigma, rng);
    }
    auto cell = [n](int z, Stratum u, std::size_t r) { return (static_cast<std::size_t>(z) * 4 + index(u)) * n + r; };
    std::vector<double> delta(cells);
    CompleteCounts complete(n);
    std::vector<double> conc_r(n), conc_u(4);

    for (std::size_t it = 0; it < options.iterations; ++it) {
      for (std::size_t k = 0; k < cells; ++k) delta[k] = expit(eta[k]);
      // Imputation with trial-specific deltas.
      std::fill(complete.data().begin(), complete.data().end(), 0);
      for (std::size_t r = 0; r < n; ++r)
        for (int z = 0; z < 2; ++z)
          for (int s = 0; s < 2; ++s)
            for (int y = 0; y < 2; ++y) {
              const std::int64_t m = counts(z, s, y, r);
              if (m == 0) continue;
              const auto pair = compatible_strata(z, s);
              auto weight = [&](Stratum u) {
                const double d = delta[cell(z, u, r)];
                return pi[4 * r + index(u)] * (y == 1 ? d : 1.0 - d);
              };
              const double wa = weight(pair.first), wb = weight(pair.second);
              const double prob = wa + wb > 0.0 ? wa / (wa + wb) : 0.5;
              const std::int64_t k = sample_binomial(m, prob, rng);
              complete(z, pair.first, y, r) += k;
              complete(z, pair.second, y, r) += m - k;
            }
      // p, alpha, pi.
      for (std::size_t r = 0; r < n; ++r) conc_r[r] = static_cast<double>(complete.trial_total(r)) + 1.0;
      sample_dirichlet(std::span<const double>(conc_r), std::span<double>(p), rng);
      for (std::size_t r = 0; r < n; ++r) {
        alpha[r] = sample_beta(static_cast<double>(complete.arm_total(1, r)) + 1.0,
                               static_cast<double>(complete.arm_total(0, r)) + 1.0, rng);
        for (Stratum u : kAllStrata) conc_u[index(u)] = static_cast<double>(complete.stratum_total(u, r)) + 1.0;
        sample_dirichlet(std::span<const double>(conc_u), std::span<double>(pi.data() + 4 * r, 4), rng);
      }
      // mu given eta.
      for (std::size_t k = 0; k < 8; ++k) {
        double avg = 0.0;
        for (std::size_t r = 0; r < n; ++r) avg += eta[k * n + r];
        avg /= static_cast<double>(n);
        const auto draw = sample_truncated_normal(avg, sigma / std::sqrt(static_cast<double>(n)), -kMuBound, kMuBound, rng);
        mu[k] = draw.value;
        if (draw.clamped) ++out.clamped;
      }
      // eta given counts and mu.
      const bool keep = it >= options.burn_in;
      for (int z = 0; z < 2; ++z)
        for (Stratum u : kAllStrata)
          for (std::size_t r = 0; r < n; ++r) {
            const std::size_t k = cell(z, u, r);
            const double n1 = static_cast<double>(complete(z, u, 1, r));
            const double n0 = static_cast<double>(complete(z, u, 0, r));
            const MisStep step = mis_step(eta[k], n1, n0, mu[static_cast<std::size_t>(z) * 4 + index(u)], sigma, rng);
            eta[k] = step.eta;
            if (step.bisected) ++out.bisections;
            if (keep && step.accepted) ++out.accepted[k];
          }
      // Joint shift of mu_k and its etas: leaves the Normal terms unchanged, so
      // mu is not stuck at the eta average when sigma is small.
      for (std::size_t k = 0; k < 8; ++k) {
        double info = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double n1 = static_cast<double>(complete(static_cast<int>(k / 4), kAllStrata[k % 4], 1, r));
          const double n0 = static_cast<double>(complete(static_cast<int>(k / 4), kAllStrata[k % 4], 0, r));
          if (n1 + n0 > 0.0) info += (n1 + 0.5) * (n0 + 0.5) / (n1 + n0 + 1.0);
        }
        const double scale = 2.4 / std::sqrt(info + 1.0);
        const double eps = sample_normal(0.0, scale, rng);
        if (std::abs(mu[k] + eps) > kMuBound) continue;
        double log_ratio = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double n1 = static_cast<double>(complete(static_cast<int>(k / 4), kAllStrata[k % 4], 1, r));
          const double n0 = static_cast<double>(complete(static_cast<int>(k / 4), kAllStrata[k % 4], 0, r));
          const double a = eta[k * n + r], b = a + eps;
          log_ratio += (-n0 * b - (n1 + n0) * log1p_exp_neg(b)) - (-n0 * a - (n1 + n0) * log1p_exp_neg(a));
        }
        if (log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio) {
          mu[k] += eps;
          for (std::size_t r = 0; r < n; ++r) eta[k * n + r] += eps;
        }
      }
      if (keep) ++out.proposals;
      if (keep && (it - options.burn_in) % options.thin == 0) {
        auto& b = out.buffer;
        b.insert(b.end(), p.begin(), p.end());
        b.insert(b.end(), alpha.begin(), alpha.end());
        b.insert(b.end(), pi.begin(), pi.end());
        b.insert(b.end(), eta.begin(), eta.end());
        b.insert(b.end(), mu.begin(), mu.end());
      }
    }
  });

  HierarchicalResult result;
  result.draws = HierarchicalDraws(n, options.chains, options);
  result.acceptance.assign(cells, 0.0);
  std::size_t proposals = 0;
  for (std::size_t c = 0; c < options.chains; ++c) {
    result.draws.buffer(c) = std::move(outs[c].buffer);
    for (std::size_t k = 0; k < cells; ++k) result.acceptance[k] += static_cast<double>(outs[c].accepted[k]);
    proposals += outs[c].proposals;
    result.bisections += outs[c].bisections;
    result.clamped_mu += outs[c].clamped;
  }
  for (double& a : result.acceptance) a /= static_cast<double>(proposals);
  if (result.bisections > 0)
    result.warnings.push_back(std::to_string(result.bisections) +
                              " mode search(es) fell back to bisection after 100 Newton steps");
  if (result.clamped_mu > 0)
    result.warnings.push_back(std::to_string(result.clamped_mu) + " mu draw(s) clamped to the [-5, 5] boundary");
  return result;
}

/// Posterior summary of the hierarchical fit. "ACE_u" rows are pooled
/// mu-scale contrasts expit(mu_1u) - expit(mu_0u), not mixture means;
/// "ACE_u_r" rows are the trial-specific effects.
inline PosteriorSummary summarize_hierarchical(const HierarchicalDraws& draws,
                                               const std::vector<double>& probs = {0.025, 0.5, 0.975}) {
  PosteriorSummary out;
  out.probs = probs;
  using View = HierarchicalDraws::View;
  for (Stratum u : kAllStrata)
    out.rows.push_back(summarize_scalar("ACE_" + std::string(name(u)),
                                        draws.trace([u](const View& v) { return v.ace_mu(u); }), probs, true));
  for (Stratum u : kAllStrata)
    for (std::size_t r = 0; r < draws.n_trials(); ++r)
      out.rows.push_back(summarize_scalar("ACE_" + std::string(name(u)) + "_" + std::to_string(r + 1),
                                          draws.trace([u, r](const View& v) { return v.ace(u, r); }), probs, true));
  for (int z = 1; z >= 0; --z)
    for (Stratum u : kAllStrata)
      out.rows.push_back(summarize_scalar("mu_" + std::to_string(z) + "_" + std::string(name(u)),
                                          draws.trace([z, u](const View& v) { return v.mu(z, u); }), probs));
  return out;
}

}  // namespace psace
