#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psace/counts.hpp"
#include "psace/em.hpp"
#include "psace/error.hpp"
#include "psace/model.hpp"
#include "psace/optimize.hpp"
#include "psace/parameters.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"

namespace psace {

// ---------------------------------------------------------------------------
// Closed-form identification from two trials (monotone model)

struct MomentEstimates {
  std::array<StratumProbs, 2> delta{};  // delta[z][u]; SbarS entries are NaN
  bool clamped = false;                 // some value fell outside [0, 1] and was clamped
};

/// delta under monotonicity from trials r1, r2. The stratum proportions are
/// read off the margins (pi_SbarSbar = P(S=0|Z=1), pi_SS = P(S=1|Z=0)) and
/// the remaining deltas solve two 2x2 linear systems.
inline MomentEstimates moment_estimators_two_trials(const ObservedDistribution& dist, std::size_t r1,
                                                    std::size_t r2) {
  if (r1 >= dist.n_trials() || r2 >= dist.n_trials() || r1 == r2)
    throw Error(ErrorCode::precondition, "need two distinct valid trials");
  auto pair_name = [&] { return "(" + std::to_string(r1 + 1) + ", " + std::to_string(r2 + 1) + ")"; };
  const double nn1 = dist.P(1, 0, r1), nn2 = dist.P(1, 0, r2);  // pi_SbarSbar
  const double ss1 = dist.P(0, 1, r1), ss2 = dist.P(0, 1, r2);  // pi_SS
  const double sb1 = 1.0 - nn1 - ss1, sb2 = 1.0 - nn2 - ss2;    // pi_SSbar

  const double det_a = ss1 * sb2 - ss2 * sb1;
  const double det_b = sb1 * nn2 - sb2 * nn1;
  if (std::abs(det_a) <= 1e-14)
    throw Error(ErrorCode::ratio_degeneracy,
                "pi_SS/pi_SSbar does not vary across trials " + pair_name());
  if (std::abs(det_b) <= 1e-14)
    throw Error(ErrorCode::ratio_degeneracy,
                "pi_SSbar/pi_SbarSbar does not vary across trials " + pair_name());
  if (!(nn1 > 0.0) || !(ss1 > 0.0))
    throw Error(ErrorCode::ratio_degeneracy, "empty SbarSbar or SS stratum in trial " + std::to_string(r1 + 1));

  const double w11_1 = dist.omega(1, 1, 1, r1), w11_2 = dist.omega(1, 1, 1, r2);
  const double w10_1 = dist.omega(1, 0, 0, r1), w10_2 = dist.omega(1, 0, 0, r2);

  MomentEstimates out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.delta[0][index(Stratum::SbarS)] = nan;
  out.delta[1][index(Stratum::SbarS)] = nan;
  out.delta[1][index(Stratum::SbarSbar)] = dist.omega(1, 0, 1, r1) / nn1;
  out.delta[0][index(Stratum::SS)] = dist.omega(1, 1, 0, r1) / ss1;
  out.delta[1][index(Stratum::SS)] = (w11_1 * sb2 - w11_2 * sb1) / det_a;
  out.delta[1][index(Stratum::SSbar)] = (w11_2 * ss1 - w11_1 * ss2) / det_a;
  out.delta[0][index(Stratum::SSbar)] = (w10_1 * nn2 - w10_2 * nn1) / det_b;
  out.delta[0][index(Stratum::SbarSbar)] = (w10_2 * sb1 - w10_1 * sb2) / det_b;
  for (auto& row : out.delta)
    for (Stratum u : kMonotoneStrata) {
      double& v = row[index(u)];
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        out.clamped = true;
      }
    }
  return out;
}

struct RatioVariation {
  std::size_t r1 = 0;
  std::size_t r2 = 0;
  bool a = false;  // pi_SS/pi_SSbar differs between the trials
  bool b = false;  // pi_SSbar/pi_SbarSbar differs between the trials
};

/// Ratio conditions for every trial pair, by cross-multiplication.
inline std::vector<RatioVariation> check_ratio_variation(const std::vector<StratumProbs>& pi,
                                                         double tolerance = 1e-12) {
  std::vector<RatioVariation> out;
  auto at = [&](std::size_t r, Stratum u) { return pi[r][index(u)]; };
  for (std::size_t i = 0; i < pi.size(); ++i)
    for (std::size_t j = i + 1; j < pi.size(); ++j) {
      RatioVariation v{i, j};
      v.a = std::abs(at(i, Stratum::SS) * at(j, Stratum::SSbar) - at(j, Stratum::SS) * at(i, Stratum::SSbar)) >
            tolerance;
      v.b = std::abs(at(i, Stratum::SSbar) * at(j, Stratum::SbarSbar) -
                     at(j, Stratum::SSbar) * at(i, Stratum::SbarSbar)) > tolerance;
      out.push_back(v);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Local identifiability

struct IdentifiabilityReport {
  std::size_t n_params = 0;
  std::size_t n_free_frequencies = 0;
  std::size_t jacobian_rank = 0;
  bool full_rank = false;
  bool necessary_condition = false;  // n_params <= n_free_frequencies
  std::vector<double> singular_values;
  std::vector<RatioVariation> ratio_variation;
};

namespace detail {

/// Minimal chart: p without coordinate `drop_p`, every alpha_r, pi_r without
/// its `drop_u`-th active coordinate, every active delta.
struct FreeChart {
  std::size_t n_trials;
  bool monotone;
  std::size_t drop_p;
  std::size_t drop_u;

  std::size_t size() const {
    const std::size_t k = num_active_strata(monotone);
    return (n_trials - 1) + n_trials + n_trials * (k - 1) + 2 * k;
  }

  Eigen::VectorXd encode(const ParameterSet& params) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
    Eigen::Index i = 0;
    for (std::size_t r = 0; r < n_trials; ++r)
      if (r != drop_p) x[i++] = params.p[r];
    for (std::size_t r = 0; r < n_trials; ++r) x[i++] = params.alpha[r];
    const auto strata = active_strata(monotone);
    for (std::size_t r = 0; r < n_trials; ++r)
      for (std::size_t k = 0; k < strata.size(); ++k)
        if (k != drop_u) x[i++] = params.pi_of(strata[k], r);
    for (int z = 0; z < 2; ++z)
      for (Stratum u : strata) x[i++] = params.delta_of(z, u);
    return x;
  }

  ParameterSet decode(const Eigen::VectorXd& x) const {
    ParameterSet params(n_trials, monotone);
    Eigen::Index i = 0;
    double rest = 1.0;
    for (std::size_t r = 0; r < n_trials; ++r)
      if (r != drop_p) rest -= (params.p[r] = x[i++]);
    params.p[drop_p] = rest;
    for (std::size_t r = 0; r < n_trials; ++r) params.alpha[r] = x[i++];
    const auto strata = active_strata(monotone);
    for (std::size_t r = 0; r < n_trials; ++r) {
      double left = 1.0;
      for (std::size_t k = 0; k < strata.size(); ++k)
        if (k != drop_u) left -= (params.pi_of(strata[k], r) = x[i++]);
      params.pi_of(strata[drop_u], r) = left;
    }
    for (int z = 0; z < 2; ++z)
      for (Stratum u : strata) params.delta_of(z, u) = x[i++];
    return params;
  }
};

}  // namespace detail

/// Numeric rank of the Jacobian of the observed cell probabilities with
/// respect to the free parameters. `chart` selects which simplex coordinate
/// is dropped; the rank does not depend on it.
inline IdentifiabilityReport local_identifiability(const ParameterSet& params, std::size_t chart = 0,
                                                   double step = 1e-6, double rank_tol = 1e-8) {
  validate(params);
  const std::size_t n = params.n_trials();
  const detail::FreeChart fc{n, params.monotone, chart % n, chart % num_active_strata(params.monotone)};
  IdentifiabilityReport report;
  report.n_params = params.n_free();
  report.n_free_frequencies = 8 * n - 1;
  report.necessary_condition = report.n_params <= report.n_free_frequencies;
  report.ratio_variation = check_ratio_variation(params.pi);

  const Eigen::VectorXd x0 = fc.encode(params);
  Eigen::MatrixXd J(static_cast<Eigen::Index>(8 * n), x0.size());
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[j] += step;
    xm[j] -= step;
    const CellProbabilities fp = cell_probabilities_unchecked(fc.decode(xp));
    const CellProbabilities fm = cell_probabilities_unchecked(fc.decode(xm));
    for (std::size_t c = 0; c < 8 * n; ++c)
      J(static_cast<Eigen::Index>(c), j) = (fp.data()[c] - fm.data()[c]) / (2.0 * step);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const Eigen::VectorXd sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv[0] : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    report.singular_values.push_back(sv[i]);
    if (sv[i] > rank_tol * largest) ++report.jacobian_rank;
  }
  report.full_rank = report.jacobian_rank == report.n_params;
  return report;
}

// ---------------------------------------------------------------------------
// Population-system inversion

struct InversionOptions {
  bool monotone = false;
  /// When set, alpha and pi are taken from here and only delta is solved for.
  std::optional<ParameterSet> known_design;
  std::size_t n_starts = 10;
  std::uint64_t seed = 1;
  double exact_tolerance = 1e-6;
};

struct InversionResult {
  ParameterSet params;
  double residual_norm = 0.0;
  bool exact = false;  // residual_norm <= exact_tolerance
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_conditional(const CellProbabilities& conditional) {
  for (std::size_t r = 0; r < conditional.n_trials(); ++r)
    if (std::abs(conditional.trial_total(r) - 1.0) > 1e-9)
      throw Error(ErrorCode::precondition,
                  "probabilities for trial " + std::to_string(r + 1) + " do not sum to 1");
}

inline Eigen::VectorXd conditional_residual(const ParameterSet& params, const CellProbabilities& target) {
  const CellProbabilities model = trial_conditional(cell_probabilities_unchecked(params));
  Eigen::VectorXd res(static_cast<Eigen::Index>(target.data().size()));
  for (std::size_t c = 0; c < target.data().size(); ++c)
    res[static_cast<Eigen::Index>(c)] = model.data()[c] - target.data()[c];
  return res;
}

/// Unconstrained chart for conditional probabilities: logit alpha_r,
/// log-ratio pi_r against the last active stratum, logit delta.
struct OpenChart {
  std::size_t n_trials;
  bool monotone;

  Eigen::VectorXd encode(const ParameterSet& params) const {
    const auto strata = active_strata(monotone);
    const std::size_t k = strata.size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(n_trials * k + 2 * k));
    Eigen::Index i = 0;
    for (std::size_t r = 0; r < n_trials; ++r) {
      x[i++] = logit(params.alpha[r]);
      const double ref = std::max(params.pi_of(strata[k - 1], r), 1e-12);
      for (std::size_t j = 0; j + 1 < k; ++j)
        x[i++] = std::log(std::max(params.pi_of(strata[j], r), 1e-12) / ref);
    }
    for (int z = 0; z < 2; ++z)
      for (Stratum u : strata) x[i++] = logit(params.delta_of(z, u));
    return x;
  }

  ParameterSet decode(const Eigen::VectorXd& x) const {
    const auto strata = active_strata(monotone);
    const std::size_t k = strata.size();
    ParameterSet params(n_trials, monotone);
    Eigen::Index i = 0;
    for (std::size_t r = 0; r < n_trials; ++r) {
      params.p[r] = 1.0 / static_cast<double>(n_trials);
      params.alpha[r] = expit(x[i++]);
      std::vector<double> e(k, 0.0);
      for (std::size_t j = 0; j + 1 < k; ++j) e[j] = x[i++];
      const double top = *std::max_element(e.begin(), e.end());
      double total = 0.0;
      for (double& v : e) total += (v = std::exp(v - top));
      for (std::size_t j = 0; j < k; ++j) params.pi_of(strata[j], r) = e[j] / total;
    }
    for (int z = 0; z < 2; ++z)
      for (Stratum u : strata) params.delta_of(z, u) = expit(x[i++]);
    return params;
  }
};

}  // namespace detail

/// Solves the observed-probability equations for the model parameters given
/// P(Z, S, Y | R). With a known design (alpha, pi) the system is linear in
/// delta and solved by least squares; otherwise multi-start EM on the
/// probabilities scaled to 10^6 units locates the basin and
/// Levenberg-Marquardt polishes the solution.
inline InversionResult invert_population_system(const CellProbabilities& conditional,
                                                const InversionOptions& options) {
  detail::check_conditional(conditional);
  const std::size_t n = conditional.n_trials();
  const bool monotone = options.monotone;
  InversionResult out;

  if (options.known_design) {
    const ParameterSet& design = *options.known_design;
    if (design.n_trials() != n)
      throw Error(ErrorCode::precondition, "known design and probabilities disagree on N_R");
    const auto strata = active_strata(monotone);
    const std::size_t k = strata.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(8 * n), static_cast<Eigen::Index>(2 * k));
    Eigen::VectorXd b(static_cast<Eigen::Index>(8 * n));
    for (std::size_t r = 0; r < n; ++r)
      for (int z = 0; z < 2; ++z) {
        const double arm = z == 1 ? design.alpha[r] : 1.0 - design.alpha[r];
        for (int s = 0; s < 2; ++s)
          for (int y = 0; y < 2; ++y) {
            const auto row = static_cast<Eigen::Index>(CellProbabilities::offset(z, s, y, r));
            double rhs = conditional(z, s, y, r);
            const auto pair = compatible_strata(z, s);
            const int m = num_compatible(z, s, monotone);
            for (int c = 0; c < m; ++c) {
              const Stratum u = c == 0 ? pair.first : pair.second;
              const auto pos = std::find(strata.begin(), strata.end(), u) - strata.begin();
              const auto col = static_cast<Eigen::Index>(static_cast<std::size_t>(z) * k + static_cast<std::size_t>(pos));
              const double w = arm * design.pi_of(u, r);
              if (y == 1) {
                A(row, col) += w;
              } else {
                A(row, col) -= w;
                rhs -= w;
              }
            }
            b[row] = rhs;
          }
      }
    const Eigen::VectorXd d = A.colPivHouseholderQr().solve(b);
    out.params = design;
    out.params.monotone = monotone;
    for (int z = 0; z < 2; ++z)
      for (std::size_t j = 0; j < k; ++j) out.params.delta_of(z, strata[j]) = d[static_cast<Eigen::Index>(static_cast<std::size_t>(z) * k + j)];
    bool outside = false;
    for (int z = 0; z < 2; ++z)
      for (Stratum u : strata) {
        double& v = out.params.delta_of(z, u);
        if (v < -1e-9 || v > 1.0 + 1e-9) outside = true;
      }
    if (outside) out.warnings.push_back("least-squares delta lies outside [0, 1]");
    out.residual_norm = (A * d - b).norm();
  } else {
    WeightedCounts scaled(n);
    for (std::size_t r = 0; r < n; ++r)
      for (int z = 0; z < 2; ++z)
        for (int s = 0; s < 2; ++s)
          for (int y = 0; y < 2; ++y) scaled(z, s, y, r) = conditional(z, s, y, r) * 1e6;
    EmOptions em;
    em.monotone = monotone;
    em.n_starts = options.n_starts;
    em.seed = options.seed;
    em.tolerance = 1e-10;
    em.max_iter = 20000;
    const EmResult fit = run_em(scaled, em);
    const detail::OpenChart chart{n, monotone};
    const auto residual = [&](const Eigen::VectorXd& x) {
      return detail::conditional_residual(chart.decode(x), conditional);
    };
    const LmResult lm = levenberg_marquardt(residual, chart.encode(fit.params));
    ParameterSet polished = chart.decode(lm.x);
    const double em_norm = detail::conditional_residual(fit.params, conditional).norm();
    const double lm_norm = std::sqrt(2.0 * lm.cost);
    out.params = lm_norm <= em_norm ? polished : fit.params;
    for (std::size_t r = 0; r < n; ++r) out.params.p[r] = 1.0 / static_cast<double>(n);
    out.residual_norm = std::min(lm_norm, em_norm);
  }
  out.exact = out.residual_norm <= options.exact_tolerance;
  if (!out.exact)
    out.warnings.push_back("no exact solution: residual norm " + std::to_string(out.residual_norm));
  return out;
}

}  // namespace psace
