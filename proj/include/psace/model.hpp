#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "psace/counts.hpp"
#include "psace/error.hpp"
#include "psace/parameters.hpp"
#include "psace/stratum.hpp"

namespace psace {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// P(Y=y | Z=z, U=u) under homogeneity.
inline double bernoulli(double delta, int y) { return y == 1 ? delta : 1.0 - delta; }

/// Mixture weight pi_ur * P(y | z, u) for one component of O(z,s).
inline double component_weight(const ParameterSet& params, int z, Stratum u, int y, std::size_t r) {
  return params.pi_of(u, r) * bernoulli(params.delta_of(z, u), y);
}

/// P(S=s, Y=y | Z=z, R=r) = sum over O(z,s) of pi_ur * delta_zu^y (1-delta_zu)^(1-y).
inline double conditional_cell(const ParameterSet& params, int z, int s, int y, std::size_t r) {
  const auto pair = compatible_strata(z, s);
  double v = component_weight(params, z, pair.first, y, r);
  if (num_compatible(z, s, params.monotone) == 2) v += component_weight(params, z, pair.second, y, r);
  return v;
}

/// Cell probabilities without the domain check; used for finite differences
/// that may step just outside the parameter space.
inline CellProbabilities cell_probabilities_unchecked(const ParameterSet& params) {
  const std::size_t n = params.n_trials();
  CellProbabilities out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (int z = 0; z < 2; ++z) {
      const double arm = params.p[r] * (z == 1 ? params.alpha[r] : 1.0 - params.alpha[r]);
      for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) out(z, s, y, r) = arm * conditional_cell(params, z, s, y, r);
    }
  return out;
}

/// Joint P(Z=z, S=s, Y=y, R=r) for every observed cell; sums to one.
inline CellProbabilities cell_probabilities(const ParameterSet& params) {
  validate(params);
  return cell_probabilities_unchecked(params);
}

/// Per-trial conditional probabilities P(Z=z, S=s, Y=y | R=r).
inline CellProbabilities trial_conditional(const CellProbabilities& joint) {
  CellProbabilities out(joint.n_trials());
  for (std::size_t r = 0; r < joint.n_trials(); ++r) {
    const double total = joint.trial_total(r);
    for (int z = 0; z < 2; ++z)
      for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y) out(z, s, y, r) = total > 0.0 ? joint(z, s, y, r) / total : 0.0;
  }
  return out;
}

/// Empirical conditional distribution of (S, Y) within each (z, r) arm.
struct TrialDistribution {
  std::array<std::array<double, 2>, 2> P{};                          // P[z][s]
  std::array<std::array<std::array<double, 2>, 2>, 2> omega{};       // omega[z][s][y]
};

class ObservedDistribution {
 public:
  ObservedDistribution() = default;
  explicit ObservedDistribution(std::vector<TrialDistribution> trials) : trials_(std::move(trials)) {}

  std::size_t n_trials() const { return trials_.size(); }
  const TrialDistribution& trial(std::size_t r) const { return trials_.at(r); }

  /// P(S=s | Z=z, R=r)
  double P(int z, int s, std::size_t r) const { return trials_.at(r).P[z][s]; }

  /// P(Y=y, S=s | Z=z, R=r)
  double omega(int y, int s, int z, std::size_t r) const { return trials_.at(r).omega[z][s][y]; }

  /// P(Y=1 | Z=z, S=s, R=r); undefined when the (z,s) cell is empty.
  double Q(int z, int s, std::size_t r) const {
    const double p = P(z, s, r);
    if (!(p > 0.0))
      throw Error(ErrorCode::empty_arm, "empty cell (z=" + std::to_string(z) + ", s=" +
                                            std::to_string(s) + ", r=" + std::to_string(r + 1) +
                                            "): Q undefined");
    return trials_[r].omega[z][s][1] / p;
  }

 private:
  std::vector<TrialDistribution> trials_;
};

/// Empirical frequencies from a count (or probability) table. Every (z, r)
/// arm must be non-empty.
template <class T>
ObservedDistribution observed_distribution(const CountTable<T>& counts) {
  std::vector<TrialDistribution> trials(counts.n_trials());
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 0; z < 2; ++z) {
      const double arm = static_cast<double>(counts.arm_total(z, r));
      if (!(arm > 0.0))
        throw Error(ErrorCode::empty_arm,
                    "empty arm (z=" + std::to_string(z) + ", r=" + std::to_string(r + 1) + ")");
      for (int s = 0; s < 2; ++s) {
        const double n1 = static_cast<double>(counts(z, s, 1, r));
        const double n0 = static_cast<double>(counts(z, s, 0, r));
        trials[r].omega[z][s][1] = n1 / arm;
        trials[r].omega[z][s][0] = n0 / arm;
        trials[r].P[z][s] = trials[r].omega[z][s][1] + trials[r].omega[z][s][0];
      }
    }
  return ObservedDistribution(std::move(trials));
}

/// n * log(prob) with 0 log 0 = 0.
inline double xlogp(double n, double prob) {
  if (n == 0.0) return 0.0;
  if (!(prob > 0.0)) return kNegInf;
  return n * std::log(prob);
}

/// Observed-data log-likelihood; -inf when a positive count sits on a
/// zero-probability cell.
template <class T>
double observed_log_likelihood(const CountTable<T>& counts, const ParameterSet& params) {
  if (counts.n_trials() != params.n_trials())
    throw Error(ErrorCode::parameter_domain, "count table and parameters disagree on N_R");
  const CellProbabilities probs = cell_probabilities(params);
  double ll = 0.0;
  for (std::size_t i = 0; i < probs.data().size(); ++i) {
    ll += xlogp(static_cast<double>(counts.data()[i]), probs.data()[i]);
    if (ll == kNegInf) return kNegInf;
  }
  return ll;
}

/// Complete-data log-likelihood (up to the multinomial coefficient).
template <class T>
double complete_log_likelihood(const StrataTable<T>& complete, const ParameterSet& params) {
  validate(params);
  if (complete.n_trials() != params.n_trials())
    throw Error(ErrorCode::parameter_domain, "complete table and parameters disagree on N_R");
  const std::size_t n = params.n_trials();
  if (params.monotone)
    for (std::size_t r = 0; r < n; ++r)
      for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 2; ++y)
          if (complete(z, Stratum::SbarS, y, r) != T{})
            throw Error(ErrorCode::support, "complete counts in stratum SbarS under monotonicity");
  double ll = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    ll += xlogp(static_cast<double>(complete.trial_total(r)), params.p[r]);
    ll += xlogp(static_cast<double>(complete.arm_total(1, r)), params.alpha[r]);
    ll += xlogp(static_cast<double>(complete.arm_total(0, r)), 1.0 - params.alpha[r]);
    for (Stratum u : active_strata(params.monotone))
      ll += xlogp(static_cast<double>(complete.stratum_total(u, r)), params.pi_of(u, r));
  }
  for (int z = 0; z < 2; ++z)
    for (Stratum u : active_strata(params.monotone)) {
      ll += xlogp(static_cast<double>(complete.outcome_total(z, u, 1)), params.delta_of(z, u));
      ll += xlogp(static_cast<double>(complete.outcome_total(z, u, 0)), 1.0 - params.delta_of(z, u));
    }
  return ll;
}

}  // namespace psace
