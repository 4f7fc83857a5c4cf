#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "psace/error.hpp"
#include "psace/parameters.hpp"
#include "psace/posterior.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Which prediction setting the user asserts for the new trial. Both share
/// the same computation; the label is carried into reports.
enum class PredictionCase { same_drug, new_drug };

inline std::string_view to_string(PredictionCase c) {
  return c == PredictionCase::same_drug ? "same_drug" : "new_drug";
}

struct StratumInterval {
  Stratum stratum = Stratum::SS;
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;
  bool contains_zero = true;
};

struct SurrogateVerdict {
  bool monotone = true;
  double level = 0.95;
  std::vector<StratumInterval> intervals;
  std::optional<double> sum_condition;  // P(ACE_SSbar + ACE_SbarS >= 0); nonmonotone only

  const StratumInterval& interval(Stratum u) const {
    for (const auto& i : intervals)
      if (i.stratum == u) return i;
    throw Error(ErrorCode::absent_stratum,
                "stratum " + std::string(name(u)) + " is not part of the monotone model");
  }

  /// Causal necessity for SS or SbarSbar: the interval contains zero.
  bool necessity(Stratum u) const {
    if (u != Stratum::SS && u != Stratum::SbarSbar)
      throw Error(ErrorCode::precondition, "necessity concerns SS and SbarSbar");
    return interval(u).contains_zero;
  }

  /// Causal sufficiency for SSbar or SbarS: the interval excludes zero.
  bool sufficiency(Stratum u) const {
    if (u != Stratum::SSbar && u != Stratum::SbarS)
      throw Error(ErrorCode::precondition, "sufficiency concerns SSbar and SbarS");
    return !interval(u).contains_zero;
  }

  double sum_probability() const {
    if (!sum_condition)
      throw Error(ErrorCode::absent_stratum, "sum condition needs SbarS, absent under monotonicity");
    return *sum_condition;
  }
};

/// Central `level` credible intervals of each ACE_u and the posterior
/// probability of ACE_SSbar + ACE_SbarS >= 0.
inline SurrogateVerdict evaluate_surrogate(const PosteriorDraws& draws, double level = 0.95) {
  if (draws.total_draws() == 0) throw Error(ErrorCode::precondition, "no posterior draws");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::config, "level must lie in (0, 1)");
  SurrogateVerdict v;
  v.monotone = draws.meta().monotone;
  v.level = level;
  const double tail = 0.5 * (1.0 - level);
  for (Stratum u : active_strata(v.monotone)) {
    std::vector<double> pooled;
    for (const auto& chain : draws.trace([u](const ParameterSet& p) { return p.ace(u); }))
      pooled.insert(pooled.end(), chain.begin(), chain.end());
    std::sort(pooled.begin(), pooled.end());
    StratumInterval si{u, quantile_sorted(pooled, tail), quantile_sorted(pooled, 0.5),
                       quantile_sorted(pooled, 1.0 - tail)};
    si.contains_zero = si.lower <= 0.0 && si.upper >= 0.0;
    v.intervals.push_back(si);
  }
  if (!v.monotone) {
    std::size_t hits = 0, total = 0;
    for (const auto& chain : draws.trace([](const ParameterSet& p) {
           return p.ace(Stratum::SSbar) + p.ace(Stratum::SbarS);
         }))
      for (double x : chain) {
        ++total;
        if (x >= 0.0) ++hits;
      }
    v.sum_condition = static_cast<double>(hits) / static_cast<double>(total);
  }
  return v;
}

/// ACE^Y in a new trial under monotonicity and causal necessity.
inline double predict_ace_y_monotone(double ace_s_new, double ace_ssbar) {
  if (ace_s_new < 0.0 || ace_s_new > 1.0)
    throw Error(ErrorCode::precondition, "ACE^S under monotonicity must lie in [0, 1]");
  return ace_s_new * ace_ssbar;
}

/// Range of ACE^Y in a new trial without monotonicity, over the feasible
/// pi_SbarS in [0, (1 - ACE^S)/2].
inline Interval predict_ace_y_bounds(double ace_s_new, double ace_ssbar, double ace_sbars) {
  if (!(ace_s_new > 0.0) || ace_s_new > 1.0)
    throw Error(ErrorCode::precondition,
                "ACE^S must lie in (0, 1]; relabel the surrogate as 1 - S if the effect is negative");
  const double at_zero = ace_s_new * ace_ssbar;
  const double at_max = 0.5 * (ace_ssbar + ace_sbars) + 0.5 * ace_s_new * (ace_ssbar - ace_sbars);
  if (ace_ssbar + ace_sbars >= 0.0) return {at_zero, at_max};
  return {at_max, at_zero};
}

enum class Sign { negative, zero, positive };
enum class SignConclusion { positive, zero, indeterminate };

inline std::string_view to_string(SignConclusion c) {
  switch (c) {
    case SignConclusion::positive: return "positive";
    case SignConclusion::zero: return "zero";
    case SignConclusion::indeterminate: return "indeterminate";
  }
  return "?";
}

/// Sign of ACE^Y implied by the sign of ACE^S when causal necessity holds.
/// `ace_sbars` is ignored under monotonicity.
inline SignConclusion sign_conclusion(Sign ace_s_new, double ace_ssbar, double ace_sbars, bool monotone) {
  if (!(ace_ssbar > 0.0)) return SignConclusion::indeterminate;
  if (monotone) {
    if (ace_s_new == Sign::positive) return SignConclusion::positive;
    if (ace_s_new == Sign::zero) return SignConclusion::zero;
    return SignConclusion::indeterminate;
  }
  if (ace_s_new == Sign::positive && ace_ssbar + ace_sbars >= 0.0) return SignConclusion::positive;
  return SignConclusion::indeterminate;
}

struct SignPosterior {
  double positive = 0.0;
  double zero = 0.0;
  double indeterminate = 0.0;
};

/// sign_conclusion applied to every posterior draw.
inline SignPosterior sign_posterior(const PosteriorDraws& draws, Sign ace_s_new) {
  SignPosterior out;
  std::size_t total = 0;
  const bool monotone = draws.meta().monotone;
  for (std::size_t c = 0; c < draws.n_chains(); ++c)
    for (std::size_t i = 0; i < draws.draws_per_chain(c); ++i) {
      const ParameterSet p = draws.draw(c, i);
      const double sbars = monotone ? 0.0 : p.ace(Stratum::SbarS);
      switch (sign_conclusion(ace_s_new, p.ace(Stratum::SSbar), sbars, monotone)) {
        case SignConclusion::positive: out.positive += 1.0; break;
        case SignConclusion::zero: out.zero += 1.0; break;
        case SignConclusion::indeterminate: out.indeterminate += 1.0; break;
      }
      ++total;
    }
  if (total == 0) throw Error(ErrorCode::precondition, "no posterior draws");
  const double n = static_cast<double>(total);
  out.positive /= n;
  out.zero /= n;
  out.indeterminate /= n;
  return out;
}

struct ParadoxReport {
  double ace_s = 0.0;
  double ace_y = 0.0;
  bool paradox = false;  // ACE^S > 0 and ACE^Y < 0
};

/// Trial-level effects on S and Y for trial r and the paradox flag.
inline ParadoxReport paradox_check(const ParameterSet& params, std::size_t r) {
  validate(params);
  if (r >= params.n_trials()) throw Error(ErrorCode::precondition, "trial index out of range");
  const PsaceSummary s = summarize_psace(params);
  ParadoxReport out{s.ace_s_r[r], s.ace_y_r[r], false};
  out.paradox = out.ace_s > 0.0 && out.ace_y < 0.0;
  return out;
}

/// Same check from stratum proportions (SS, SSbar, SbarSbar, SbarS) and
/// stratum effects given directly.
inline ParadoxReport paradox_check(const StratumProbs& pi, const StratumProbs& ace) {
  ParadoxReport out;
  out.ace_s = pi[index(Stratum::SSbar)] - pi[index(Stratum::SbarS)];
  for (Stratum u : kAllStrata) out.ace_y += pi[index(u)] * ace[index(u)];
  out.paradox = out.ace_s > 0.0 && out.ace_y < 0.0;
  return out;
}

}  // namespace psace
