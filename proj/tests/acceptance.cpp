// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fixtures.hpp"
#include "psace.hpp"

using namespace psace;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& run) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-4s %s | %s (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Settings {
  std::size_t reps_coverage = 200;
  std::size_t reps_lrt = 200;
  std::size_t runs_ppp = 20;
  std::size_t iterations = 20000;
  std::size_t burn_in = 4000;
  std::uint64_t seed = 20240601;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Settings s;
  bool quick = false;
  app.add_flag("--quick", quick, "Fewer replicates and shorter chains (smoke run)");
  app.add_option("--seed", s.seed, "Master seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (quick) {
    s.reps_coverage = 20;
    s.reps_lrt = 40;
    s.runs_ppp = 4;
    s.iterations = 4000;
    s.burn_in = 1000;
  }
  std::printf("acceptance run%s, seed %llu\n", quick ? " (quick: reduced replicates, not the pinned sizes)" : "",
              static_cast<unsigned long long>(s.seed));
  const RngStream root = RngStream::from_seed(s.seed);

  report(1, "inversion of the three-trial table", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ParameterSet truth = fixtures::three_trials();
    InversionOptions opt;
    opt.monotone = false;
    opt.known_design = truth;
    const InversionResult inv = invert_population_system(fixtures::printed_table(), opt);
    double err = 0.0;
    for (int z = 0; z < 2; ++z)
      for (Stratum u : kAllStrata) err = std::max(err, std::abs(inv.params.delta_of(z, u) - truth.delta_of(z, u)));
    const double secs = seconds_since(t0);
    const bool ok = inv.residual_norm < 1e-8 && err < 1e-6 && secs < 10.0;
    return Outcome{ok, "residual " + fmt("%.2e", inv.residual_norm) + " (< 1e-8), max |err| " + fmt("%.2e", err) +
                           " (< 1e-6), " + fmt("%.2f", secs) + "s (< 10s)"};
  });

  report(2, "closed-form deltas from two monotone trials", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = find_scenario("monotone-2");
    const ObservedDistribution dist = observed_distribution(cell_probabilities(sc.truth));
    const MomentEstimates est = moment_estimators_two_trials(dist, 0, 1);
    double err = 0.0;
    for (int z = 0; z < 2; ++z)
      for (Stratum u : kMonotoneStrata) err = std::max(err, std::abs(est.delta[z][index(u)] - sc.truth.delta_of(z, u)));
    const double secs = seconds_since(t0);
    return Outcome{err < 1e-12 && secs < 1.0, "max |err| over 6 deltas " + fmt("%.2e", err) + " (< 1e-12)"};
  });

  report(3, "closed-form bounds vs grid oracle", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng = root.split("criterion3");
    double worst = 0.0;
    std::size_t nested_fail = 0, monotone_compatible = 0;
    const std::vector<double> ones(4, 1.0);
    for (int i = 0; i < 1000; ++i) {
      CellProbabilities joint(1);
      const double alpha = 0.2 + 0.6 * rng.uniform();
      for (int z = 0; z < 2; ++z) {
        const std::vector<double> w = sample_dirichlet(std::span<const double>(ones), rng);
        const double arm = z == 1 ? alpha : 1.0 - alpha;
        joint(z, 1, 1, 0) = arm * w[0];
        joint(z, 1, 0, 0) = arm * w[1];
        joint(z, 0, 1, 0) = arm * w[2];
        joint(z, 0, 0, 0) = arm * w[3];
      }
      const ObservedDistribution dist = observed_distribution(joint);
      const TrialDistribution& d = dist.trial(0);
      const BoundsResult mono = psace_bounds_monotone(dist, 0);
      const BoundsResult non = psace_bounds_nonmonotone(dist, 0);
      for (Stratum u : kMonotoneStrata) {
        const Interval g = fixtures::grid_oracle(d, u, true, 0);
        worst = std::max({worst, std::abs(g.lower - mono.at(u).lower), std::abs(g.upper - mono.at(u).upper)});
      }
      for (Stratum u : kAllStrata) {
        const Interval g = fixtures::grid_oracle(d, u, false, 10000);
        worst = std::max({worst, std::abs(g.lower - non.at(u).lower), std::abs(g.upper - non.at(u).upper)});
      }
      if (d.P[0][1] <= d.P[1][1]) {
        ++monotone_compatible;
        for (Stratum u : kMonotoneStrata)
          if (non.at(u).lower > mono.at(u).lower + 1e-12 || non.at(u).upper < mono.at(u).upper - 1e-12) ++nested_fail;
      }
    }
    const double secs = seconds_since(t0);
    return Outcome{worst < 1e-9 && nested_fail == 0 && secs < 60.0,
                   "max |closed - grid| " + fmt("%.2e", worst) + " (< 1e-9), nesting violations " +
                       std::to_string(nested_fail) + " of " + std::to_string(monotone_compatible) +
                       " monotone-compatible tables"};
  });

  const Scenario mono3 = find_scenario("monotone-3", 500);
  double crit4_psrf = std::numeric_limits<double>::quiet_NaN();
  report(4, "coverage, monotone N_R=3, N=500", [&] {
    EvalConfig cfg;
    cfg.gibbs.iterations = s.iterations;
    cfg.gibbs.burn_in = s.burn_in;
    cfg.gibbs.chains = 5;
    const EvalReport rep = evaluate(mono3, s.reps_coverage, cfg, root.split("criterion4")());
    bool ok = rep.failures == 0;
    std::string detail;
    crit4_psrf = 0.0;
    for (const auto& e : rep.strata) {
      ok = ok && e.coverage >= 0.90 && e.coverage <= 0.98 && std::abs(e.bias) < 0.03 && std::abs(e.posterior_bias) < 0.03;
      detail += std::string(name(e.stratum)) + " cov " + fmt("%.3f", e.coverage) + " bias(mle) " + fmt("%+.4f", e.bias) +
                " bias(median) " + fmt("%+.4f", e.posterior_bias) + "; ";
      crit4_psrf = std::max(crit4_psrf, e.max_psrf);
    }
    return Outcome{ok, detail + std::to_string(rep.replicates) + " reps, cov in [0.90, 0.98], |bias| < 0.03"};
  });

  report(5, "coverage loss under heterogeneity d=0.05, N=2000", [&] {
    EvalConfig cfg;
    cfg.run_em = false;
    cfg.gibbs.iterations = s.iterations;
    cfg.gibbs.burn_in = s.burn_in;
    cfg.gibbs.chains = 1;
    const EvalReport rep = evaluate(find_scenario("monotone-3-d0.05", 2000), s.reps_coverage, cfg, root.split("criterion5")());
    const double cov = rep.at(Stratum::SS).coverage;
    return Outcome{cov < 0.90, "ACE_SS coverage " + fmt("%.3f", cov) + " (< 0.90) over " + std::to_string(rep.replicates) +
                                   " reps"};
  });

  report(6, "LRT calibration, nonmonotone N_R=3, N=500", [&] {
    bool df_ok = true;
    for (std::size_t n = 2; n <= 10; ++n) {
      const long hand_mono = 4 * static_cast<long>(n) - 6, hand_non = 3 * static_cast<long>(n) - 8;
      df_ok = df_ok && degrees_of_freedom(n, true) == hand_mono && degrees_of_freedom(n, false) == hand_non;
    }
    const Scenario sc = find_scenario("nonmonotone-3", 500);
    const RngStream stream = root.split("criterion6");
    std::vector<double> pvals(s.reps_lrt);
    parallel_for(s.reps_lrt, [&](std::size_t i) {
      RngStream rng = stream.split(i);
      const ObservedCounts data = generate_dataset(sc, rng());
      EmOptions em;
      em.monotone = false;
      em.seed = rng();
      pvals[i] = lrt(data, false, em).p_value;
    });
    const double d = ks_statistic(pvals, [](double x) { return std::clamp(x, 0.0, 1.0); });
    const double p = ks_p_value(d, pvals.size());
    return Outcome{df_ok && p > 0.01, "KS D " + fmt("%.4f", d) + " p " + fmt("%.4f", p) + " (> 0.01) over " +
                                          std::to_string(pvals.size()) + " reps; df arithmetic N_R=2..10 " +
                                          (df_ok ? "matches" : "MISMATCH")};
  });

  report(7, "ppp discriminates monotone from nonmonotone truth, N=2000", [&] {
    const Scenario sc = find_scenario("nonmonotone-3", 2000);
    const RngStream stream = root.split("criterion7");
    std::size_t hits = 0;
    std::string vals;
    for (std::size_t k = 0; k < s.runs_ppp; ++k) {
      RngStream rng = stream.split(k);
      const ObservedCounts data = generate_dataset(sc, rng());
      double ppp[2];
      for (int m = 0; m < 2; ++m) {
        GibbsOptions g;
        g.monotone = m == 0;
        g.iterations = s.iterations;
        g.burn_in = s.burn_in;
        g.chains = 1;
        g.seed = rng();
        const GibbsResult post = run_gibbs(data, g);
        PppOptions po;
        po.n_rep = 500;
        po.seed = rng();
        ppp[m] = posterior_predictive_p(data, post.draws, po).ppp;
      }
      const bool hit = ppp[0] < 0.10 && ppp[1] >= 0.2 && ppp[1] <= 0.8;
      hits += hit;
      vals += fmt("%.3f", ppp[0]) + "/" + fmt("%.3f", ppp[1]) + (k + 1 < s.runs_ppp ? " " : "");
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(s.runs_ppp);
    return Outcome{frac >= 0.8, fmt("%.2f", frac) + " of runs (>= 0.80) with monotone ppp < 0.10 and nonmonotone ppp in "
                                                    "[0.2, 0.8]; mono/nonmono: " + vals};
  });

  report(8, "surrogate arithmetic", [&] {
    const Interval b = predict_ace_y_bounds(0.2, 0.5, -0.4);
    const StratumProbs ace{0.0, 0.4, 0.0, -0.6};
    const ParadoxReport first = paradox_check(StratumProbs{0.2, 0.4, 0.2, 0.2}, ace);
    const ParadoxReport second = paradox_check(StratumProbs{0.1, 0.4, 0.2, 0.3}, ace);
    const bool ok = std::abs(b.lower - 0.10) < 1e-15 && std::abs(b.upper - 0.14) < 1e-15 &&
                    std::abs(first.ace_y - 0.04) < 1e-15 && std::abs(second.ace_y + 0.02) < 1e-15 && !first.paradox &&
                    second.paradox;
    return Outcome{ok, "bounds [" + fmt("%.17g", b.lower) + ", " + fmt("%.17g", b.upper) + "], ACE^Y pair (" +
                           fmt("%.17g", first.ace_y) + ", " + fmt("%.17g", second.ace_y) + ")"};
  });

  double crit9_acceptance = std::numeric_limits<double>::quiet_NaN();
  report(9, "hierarchical model agrees with homogeneous fit, N=2000", [&] {
    const Scenario sc = find_scenario("nonmonotone-3", 2000);
    RngStream rng = root.split("criterion9");
    const ObservedCounts data = generate_dataset(sc, rng());
    GibbsOptions g;
    g.monotone = false;
    g.iterations = s.iterations;
    g.burn_in = s.burn_in;
    g.chains = 3;
    g.seed = rng();
    const PosteriorSummary homo = summarize(run_gibbs(data, g).draws);
    const std::uint64_t hseed = rng();
    double worst = 0.0;
    std::array<double, 4> diff{};
    std::array<std::vector<double>, 4> widths;
    crit9_acceptance = 1.0;
    for (double sigma : {0.05, 0.2, 0.5}) {
      HierarchicalOptions h;
      h.sigma = sigma;
      h.iterations = s.iterations;
      h.burn_in = s.burn_in;
      h.chains = 3;
      h.seed = hseed;
      const HierarchicalResult res = run_hierarchical_gibbs(data, h);
      crit9_acceptance = std::min(crit9_acceptance, res.min_acceptance());
      const PosteriorSummary hs = summarize_hierarchical(res.draws);
      for (Stratum u : kAllStrata) {
        const std::string key = "ACE_" + std::string(name(u));
        const double gap = std::abs(hs.row(key).quantiles[1] - homo.row(key).quantiles[1]);
        worst = std::max(worst, gap);
        diff[index(u)] = std::max(diff[index(u)], gap);
        widths[index(u)].push_back(hs.row(key).quantiles[2] - hs.row(key).quantiles[0]);
      }
    }
    int widening = 0;
    std::string wd;
    for (Stratum u : kAllStrata) {
      const auto& w = widths[index(u)];
      widening += (w[1] >= w[0] && w[2] >= w[1]);
      wd += std::string(name(u)) + " " + fmt("%.3f", w[0]) + "/" + fmt("%.3f", w[1]) + "/" + fmt("%.3f", w[2]) + "; ";
    }
    std::string gaps;
    for (Stratum u : kAllStrata) gaps += (gaps.empty() ? "" : " ") + std::string(name(u)) + " " + fmt("%.3f", diff[index(u)]);
    return Outcome{worst < 0.08 && widening >= 3, "max |median diff| " + fmt("%.4f", worst) + " (< 0.08; per stratum " +
                                                      gaps + "), widths (sigma "
                                                  "0.05/0.2/0.5) " + wd + std::to_string(widening) +
                                                      " of 4 non-decreasing (>= 3)"};
  });

  report(10, "MCMC validity", [&] {
    std::string detail;
    double min_p = 1.0;
    for (bool monotone : {true, false}) {
      ObservedCounts zero(3);
      GibbsOptions g;
      g.monotone = monotone;
      g.iterations = 6000;
      g.burn_in = 1000;
      g.chains = 1;
      g.seed = root.split("criterion10")();
      const GibbsResult post = run_gibbs(zero, g);
      for (int z = 0; z < 2; ++z)
        for (Stratum u : active_strata(monotone)) {
          std::vector<double> v;
          for (const auto& c : post.draws.trace([z, u](const ParameterSet& p) { return p.delta_of(z, u); }))
            v.insert(v.end(), c.begin(), c.end());
          const double d = ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
          min_p = std::min(min_p, ks_p_value(d, v.size()));
        }
    }
    const bool ok = min_p > 0.01 && crit4_psrf < 1.05 && crit9_acceptance > 0.5;
    detail = "prior recovery min KS p " + fmt("%.4f", min_p) + " (> 0.01), criterion-4 max PSRF " +
             fmt("%.4f", crit4_psrf) + " (< 1.05), criterion-9 min MIS acceptance " + fmt("%.4f", crit9_acceptance) +
             " (> 0.5)";
    return Outcome{ok, detail};
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
