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
#include "psace/em.hpp"
#include "psace/error.hpp"
#include "psace/gibbs.hpp"
#include "psace/parallel.hpp"
#include "psace/parameters.hpp"
#include "psace/posterior.hpp"
#include "psace/rng.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Data-generating setting. Under heterogeneity, delta_zur = mu_zu -
/// (-1)^z d c_r with c_r running linearly from +1 (first trial) to -1 (last),
/// so for three trials c = (1, 0, -1). `truth.delta` holds mu.
struct Scenario {
  std::string name;
  ParameterSet truth;
  double d = 0.0;
  std::size_t n_per_trial = 500;

  std::size_t n_trials() const { return truth.n_trials(); }
  bool monotone() const { return truth.monotone; }

  double shift(std::size_t r) const {
    const std::size_t n = n_trials();
    return n > 1 ? 1.0 - 2.0 * static_cast<double>(r) / static_cast<double>(n - 1) : 0.0;
  }

  double delta(int z, Stratum u, std::size_t r) const {
    const double sign = z == 1 ? -1.0 : 1.0;  // (-1)^z
    return truth.delta_of(z, u) - sign * d * shift(r);
  }

  void validate() const {
    psace::validate(truth);
    for (std::size_t r = 0; r < n_trials(); ++r)
      for (int z = 0; z < 2; ++z)
        for (Stratum u : active_strata(monotone())) {
          const double v = delta(z, u, r);
          if (v < 0.0 || v > 1.0)
            throw Error(ErrorCode::parameter_domain, "heterogeneous delta outside [0, 1] in scenario " + name);
        }
  }
};

namespace detail {

inline ParameterSet scenario_params(bool monotone, const std::vector<StratumProbs>& pi,
                                    const std::vector<double>& alpha) {
  const std::size_t n = pi.size();
  ParameterSet p(n, monotone);
  for (std::size_t r = 0; r < n; ++r) {
    p.p[r] = 1.0 / static_cast<double>(n);
    p.alpha[r] = alpha[r];
    p.pi[r] = pi[r];
  }
  const StratumProbs d1{0.8, 0.7, 0.6, 0.5};
  const StratumProbs d0{0.5, 0.3, 0.1, 0.2};
  p.delta[1] = d1;
  p.delta[0] = d0;
  if (monotone) p.delta[1][index(Stratum::SbarS)] = p.delta[0][index(Stratum::SbarS)] = 0.0;
  return p;
}

}  // namespace detail

/// The simulation settings: monotone N_R in {2, 3, 5}, nonmonotone N_R in
/// {3, 4, 5}, and the three-trial heterogeneity variants with d in
/// {0.01, 0.025, 0.05}. Names: "monotone-3", "nonmonotone-4",
/// "monotone-3-d0.05", ...
inline std::vector<Scenario> builtin_scenarios(std::size_t n_per_trial = 500) {
  using V = std::vector<StratumProbs>;
  using A = std::vector<double>;
  std::vector<Scenario> out;
  auto add = [&](std::string name, bool monotone, const V& pi, const A& alpha, double d = 0.0) {
    out.push_back({std::move(name), detail::scenario_params(monotone, pi, alpha), d, n_per_trial});
  };
  const V m2{{0.7, 0.2, 0.1, 0}, {0.1, 0.2, 0.7, 0}};
  const V m3{{0.8, 0.1, 0.1, 0}, {0.1, 0.8, 0.1, 0}, {0.1, 0.1, 0.8, 0}};
  const V m5{{0.8, 0.1, 0.1, 0}, {0.6, 0.3, 0.1, 0}, {0.3, 0.2, 0.5, 0}, {0.1, 0.3, 0.6, 0}, {0.1, 0.1, 0.8, 0}};
  const V n3{{0.6, 0.2, 0.1, 0.1}, {0.1, 0.6, 0.2, 0.1}, {0.1, 0.1, 0.6, 0.2}};
  const V n4{{0.6, 0.2, 0.1, 0.1}, {0.1, 0.6, 0.2, 0.1}, {0.1, 0.1, 0.6, 0.2}, {0.2, 0.3, 0.2, 0.3}};
  const V n5{{0.6, 0.2, 0.1, 0.1}, {0.1, 0.6, 0.2, 0.1}, {0.3, 0.2, 0.3, 0.2}, {0.4, 0.1, 0.4, 0.1},
             {0.1, 0.1, 0.6, 0.2}};
  add("monotone-2", true, m2, {0.4, 0.6});
  add("monotone-3", true, m3, {0.4, 0.5, 0.6});
  add("monotone-5", true, m5, {0.3, 0.4, 0.5, 0.6, 0.7});
  add("nonmonotone-3", false, n3, {0.4, 0.5, 0.6});
  add("nonmonotone-4", false, n4, {0.4, 0.5, 0.6, 0.7});
  add("nonmonotone-5", false, n5, {0.3, 0.4, 0.5, 0.6, 0.7});
  for (const char* tag : {"0.01", "0.025", "0.05"}) {
    const double d = std::stod(tag);
    add(std::string("monotone-3-d") + tag, true, m3, {0.4, 0.5, 0.6}, d);
    add(std::string("nonmonotone-3-d") + tag, false, n3, {0.4, 0.5, 0.6}, d);
  }
  return out;
}

inline Scenario find_scenario(const std::string& name, std::size_t n_per_trial = 500) {
  for (auto& s : builtin_scenarios(n_per_trial))
    if (s.name == name) return s;
  throw Error(ErrorCode::config, "unknown scenario '" + name + "'");
}

/// Joint probabilities of the complete cells (z, u, y, r) under the scenario.
inline ExpectedCounts complete_cell_probabilities(const Scenario& scenario) {
  const ParameterSet& t = scenario.truth;
  ExpectedCounts out(scenario.n_trials());
  for (std::size_t r = 0; r < scenario.n_trials(); ++r)
    for (int z = 0; z < 2; ++z)
      for (Stratum u : active_strata(t.monotone)) {
        const double base = t.p[r] * (z == 1 ? t.alpha[r] : 1.0 - t.alpha[r]) * t.pi_of(u, r);
        const double d = scenario.delta(z, u, r);
        out(z, u, 1, r) = base * d;
        out(z, u, 0, r) = base * (1.0 - d);
      }
  return out;
}

/// n_per_trial * N_R units with R ~ categorical(p), Z | R ~ Bernoulli(alpha_r),
/// U | R ~ categorical(pi_r), Y | Z, U, R ~ Bernoulli(delta_zur), S = S(Z; U).
/// The units are i.i.d., so the complete table is drawn as one multinomial.
inline ObservedCounts generate_dataset(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  RngStream rng = RngStream::from_seed(seed).split("data");
  const ExpectedCounts probs = complete_cell_probabilities(scenario);
  const auto total = static_cast<std::int64_t>(scenario.n_per_trial * scenario.n_trials());
  const std::vector<std::int64_t> draw = sample_multinomial(total, probs.data(), rng);
  CompleteCounts complete(scenario.n_trials());
  std::copy(draw.begin(), draw.end(), complete.data().begin());
  return complete.collapse();
}

struct EvalConfig {
  bool run_em = true;
  bool run_gibbs = true;
  EmOptions em;          // monotone flag and seed are set per replicate
  GibbsOptions gibbs;    // idem
  double level = 0.95;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  bool failed = false;
  std::string failure;
  StratumProbs mle{};            // EM estimate of ACE_u
  StratumProbs median{};         // posterior median
  StratumProbs lower{}, upper{}; // credible interval
  std::array<bool, 4> covered{};
  StratumProbs psrf{};
};

struct StratumEval {
  Stratum stratum = Stratum::SS;
  double truth = 0.0;
  double bias = 0.0;  // mean MLE - truth
  double rmse = 0.0;
  double posterior_bias = 0.0;  // mean posterior median - truth
  double coverage = 0.0;
  double mean_width = 0.0;
  double max_psrf = 0.0;
};

struct EvalReport {
  std::string scenario;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::vector<StratumEval> strata;
  std::vector<ReplicateRecord> records;
  std::vector<std::string> warnings;

  const StratumEval& at(Stratum u) const {
    for (const auto& s : strata)
      if (s.stratum == u) return s;
    throw Error(ErrorCode::absent_stratum, "stratum " + std::string(name(u)) + " not evaluated");
  }
};

/// Replicate i draws its data with seed derived from seed/"replicate"/#i and
/// its EM and Gibbs seeds from the same stream, so the report does not
/// depend on scheduling. Truth for the effects is the mu contrast.
inline EvalReport evaluate(const Scenario& scenario, std::size_t n_replicates, const EvalConfig& config,
                           std::uint64_t seed) {
  if (n_replicates < 1) throw Error(ErrorCode::precondition, "need at least one replicate");
  scenario.validate();
  const bool monotone = scenario.monotone();
  const auto strata = active_strata(monotone);
  const RngStream root = RngStream::from_seed(seed).split("replicate");
  std::vector<ReplicateRecord> records(n_replicates);
  const double tail = 0.5 * (1.0 - config.level);

  parallel_for(n_replicates, [&](std::size_t i) {
    ReplicateRecord& rec = records[i];
    rec.replicate = i;
    RngStream rng = root.split(i);
    const std::uint64_t data_seed = rng(), em_seed = rng(), gibbs_seed = rng();
    try {
      const ObservedCounts counts = generate_dataset(scenario, data_seed);
      if (config.run_em) {
        EmOptions em = config.em;
        em.monotone = monotone;
        em.seed = em_seed;
        const EmResult fit = run_em(counts, em);
        for (Stratum u : strata) rec.mle[index(u)] = fit.params.ace(u);
      }
      if (config.run_gibbs) {
        GibbsOptions g = config.gibbs;
        g.monotone = monotone;
        g.seed = gibbs_seed;
        const GibbsResult post = run_gibbs(counts, g);
        for (Stratum u : strata) {
          const auto chains = post.draws.trace([u](const ParameterSet& p) { return p.ace(u); });
          const SummaryRow row = summarize_scalar("ACE", chains, {tail, 0.5, 1.0 - tail}, true);
          rec.lower[index(u)] = row.quantiles[0];
          rec.median[index(u)] = row.quantiles[1];
          rec.upper[index(u)] = row.quantiles[2];
          rec.psrf[index(u)] = row.psrf;
          const double truth = scenario.truth.ace(u);
          rec.covered[index(u)] = row.quantiles[0] <= truth && truth <= row.quantiles[2];
        }
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.failure = e.what();
    }
  });

  EvalReport report;
  report.scenario = scenario.name;
  report.records = std::move(records);
  std::size_t ok = 0;
  for (const auto& rec : report.records) {
    if (rec.failed)
      ++report.failures;
    else
      ++ok;
  }
  report.replicates = ok;
  if (report.failures * 20 > n_replicates)
    report.warnings.push_back(std::to_string(report.failures) + " of " + std::to_string(n_replicates) +
                              " replicates failed");
  if (ok == 0) throw Error(ErrorCode::numerical, "every replicate failed");
  for (Stratum u : strata) {
    StratumEval ev;
    ev.stratum = u;
    ev.truth = scenario.truth.ace(u);
    double se = 0.0;
    for (const auto& rec : report.records) {
      if (rec.failed) continue;
      const std::size_t k = index(u);
      ev.bias += rec.mle[k] - ev.truth;
      se += (rec.mle[k] - ev.truth) * (rec.mle[k] - ev.truth);
      ev.posterior_bias += rec.median[k] - ev.truth;
      ev.coverage += rec.covered[k] ? 1.0 : 0.0;
      ev.mean_width += rec.upper[k] - rec.lower[k];
      if (!std::isnan(rec.psrf[k])) ev.max_psrf = std::max(ev.max_psrf, rec.psrf[k]);
    }
    const double n = static_cast<double>(ok);
    ev.bias /= n;
    ev.rmse = std::sqrt(se / n);
    ev.posterior_bias /= n;
    ev.coverage /= n;
    ev.mean_width /= n;
    if (!config.run_em) ev.bias = ev.rmse = std::numeric_limits<double>::quiet_NaN();
    if (!config.run_gibbs)
      ev.posterior_bias = ev.coverage = ev.mean_width = ev.max_psrf = std::numeric_limits<double>::quiet_NaN();
    report.strata.push_back(ev);
  }
  return report;
}

}  // namespace psace
