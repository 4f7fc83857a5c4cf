#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psace/error.hpp"
#include "psace/parameters.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Post-burn-in parameter draws, one flat buffer per chain. Each draw is
/// packed as p[N], alpha[N], pi[N][4], delta[2][4].
class PosteriorDraws {
 public:
  struct Meta {
    bool monotone = true;
    std::size_t n_trials = 0;
    std::size_t chains = 0;
    std::size_t iterations = 0;
    std::size_t burn_in = 0;
    std::size_t thin = 1;
    std::uint64_t seed = 0;
  };

  PosteriorDraws() = default;
  explicit PosteriorDraws(Meta meta) : meta_(meta), chains_(meta.chains) {}

  const Meta& meta() const { return meta_; }
  std::size_t n_chains() const { return chains_.size(); }
  std::size_t draws_per_chain(std::size_t c) const { return chains_.at(c).size() / stride(); }
  std::size_t total_draws() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < n_chains(); ++c) n += draws_per_chain(c);
    return n;
  }
  std::size_t stride() const { return 6 * meta_.n_trials + 8; }

  void push(std::size_t chain, const ParameterSet& params) {
    auto& buf = chains_.at(chain);
    buf.insert(buf.end(), params.p.begin(), params.p.end());
    buf.insert(buf.end(), params.alpha.begin(), params.alpha.end());
    for (const auto& row : params.pi) buf.insert(buf.end(), row.begin(), row.end());
    for (const auto& row : params.delta) buf.insert(buf.end(), row.begin(), row.end());
  }

  ParameterSet draw(std::size_t chain, std::size_t i) const {
    const std::size_t n = meta_.n_trials;
    const double* d = chains_.at(chain).data() + i * stride();
    ParameterSet out(n, meta_.monotone);
    for (std::size_t r = 0; r < n; ++r) {
      out.p[r] = d[r];
      out.alpha[r] = d[n + r];
      for (std::size_t u = 0; u < kNumStrata; ++u) out.pi[r][u] = d[2 * n + 4 * r + u];
    }
    for (std::size_t z = 0; z < 2; ++z)
      for (std::size_t u = 0; u < kNumStrata; ++u) out.delta[z][u] = d[6 * n + 4 * z + u];
    return out;
  }

  /// Per-chain traces of a scalar function of the parameters.
  std::vector<std::vector<double>> trace(const std::function<double(const ParameterSet&)>& f) const {
    std::vector<std::vector<double>> out(n_chains());
    for (std::size_t c = 0; c < n_chains(); ++c) {
      out[c].reserve(draws_per_chain(c));
      for (std::size_t i = 0; i < draws_per_chain(c); ++i) out[c].push_back(f(draw(c, i)));
    }
    return out;
  }

  void append_chain(std::size_t chain, const PosteriorDraws& other, std::size_t other_chain) {
    const auto& src = other.chains_.at(other_chain);
    chains_.at(chain).insert(chains_.at(chain).end(), src.begin(), src.end());
  }

 private:
  Meta meta_;
  std::vector<std::vector<double>> chains_;
};

/// Potential scale reduction factor. W is the mean within-chain variance and
/// B = n * var(chain means); chains are truncated to the shortest length.
/// Returns +inf when W = 0 but the chains disagree.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw Error(ErrorCode::precondition, "Gelman-Rubin needs at least 2 chains");
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 10) throw Error(ErrorCode::precondition, "Gelman-Rubin needs at least 10 draws per chain");
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const std::span<const double> head(c.data(), n);
    means.push_back(mean(head));
    w += variance(head);
  }
  w /= static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);
  const double b = nn * variance(means);
  if (!(w > 0.0)) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(((nn - 1.0) / nn * w + b / nn) / w);
}

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  std::vector<double> quantiles;
  double psrf = std::numeric_limits<double>::quiet_NaN();
  bool is_effect = false;       // a causal-effect row
  bool excludes_zero = false;   // central interval (first, last quantile) excludes 0
  std::size_t modes = 0;        // count_modes of the pooled draws, effect rows only
};

struct PosteriorSummary {
  std::vector<double> probs;
  std::vector<SummaryRow> rows;

  const SummaryRow& row(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw Error(ErrorCode::precondition, "no summary row named " + name);
  }
};

inline SummaryRow summarize_scalar(std::string name, const std::vector<std::vector<double>>& chains,
                                   const std::vector<double>& probs, bool is_effect = false) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.empty()) throw Error(ErrorCode::precondition, "summary of empty draws");
  SummaryRow row;
  row.name = std::move(name);
  row.mean = mean(pooled);
  if (is_effect) row.modes = count_modes(pooled);
  std::sort(pooled.begin(), pooled.end());
  for (double q : probs) row.quantiles.push_back(quantile_sorted(pooled, q));
  std::size_t shortest = pooled.size();
  for (const auto& c : chains) shortest = std::min(shortest, c.size());
  if (chains.size() >= 2 && shortest >= 10) row.psrf = gelman_rubin(chains);
  row.is_effect = is_effect;
  if (is_effect && !row.quantiles.empty())
    row.excludes_zero = row.quantiles.front() > 0.0 || row.quantiles.back() < 0.0;
  return row;
}

/// Named scalar functions of a parameter set, in report order.
inline std::vector<std::pair<std::string, std::function<double(const ParameterSet&)>>> parameter_scalars(
    std::size_t n_trials, bool monotone) {
  std::vector<std::pair<std::string, std::function<double(const ParameterSet&)>>> out;
  for (Stratum u : active_strata(monotone))
    out.emplace_back("ACE_" + std::string(name(u)), [u](const ParameterSet& p) { return p.ace(u); });
  for (std::size_t r = 0; r < n_trials; ++r) {
    const std::string tag = "_" + std::to_string(r + 1);
    out.emplace_back("ACE_S" + tag, [r](const ParameterSet& p) { return summarize_psace(p).ace_s_r[r]; });
    out.emplace_back("ACE_Y" + tag, [r](const ParameterSet& p) { return summarize_psace(p).ace_y_r[r]; });
  }
  for (int z = 1; z >= 0; --z)
    for (Stratum u : active_strata(monotone))
      out.emplace_back("delta_" + std::to_string(z) + "_" + std::string(name(u)),
                       [z, u](const ParameterSet& p) { return p.delta_of(z, u); });
  for (std::size_t r = 0; r < n_trials; ++r) {
    const std::string tag = "_" + std::to_string(r + 1);
    out.emplace_back("p" + tag, [r](const ParameterSet& p) { return p.p[r]; });
    out.emplace_back("alpha" + tag, [r](const ParameterSet& p) { return p.alpha[r]; });
    for (Stratum u : active_strata(monotone))
      out.emplace_back("pi_" + std::string(name(u)) + tag,
                       [u, r](const ParameterSet& p) { return p.pi_of(u, r); });
  }
  return out;
}

inline bool is_effect_name(const std::string& name) { return name.rfind("ACE_", 0) == 0; }

/// Quantiles, means and PSRFs for every parameter and causal effect.
inline PosteriorSummary summarize(const PosteriorDraws& draws,
                                  const std::vector<double>& probs = {0.025, 0.5, 0.975}) {
  if (draws.total_draws() == 0) throw Error(ErrorCode::precondition, "summary of empty draws");
  PosteriorSummary out;
  out.probs = probs;
  for (const auto& [label, f] : parameter_scalars(draws.meta().n_trials, draws.meta().monotone))
    out.rows.push_back(summarize_scalar(label, draws.trace(f), probs, is_effect_name(label)));
  return out;
}

}  // namespace psace
