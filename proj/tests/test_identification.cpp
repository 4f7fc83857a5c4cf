#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psace.hpp"

using namespace psace;

TEST(Moments, TwoTrialScenarioInputs) {
  const ObservedDistribution d = observed_distribution(cell_probabilities(find_scenario("monotone-2").truth));
  EXPECT_NEAR(d.omega(1, 1, 1, 0), 0.70, 1e-12);
  EXPECT_NEAR(d.omega(1, 1, 1, 1), 0.22, 1e-12);
  EXPECT_NEAR(d.omega(1, 0, 0, 0), 0.07, 1e-12);
  EXPECT_NEAR(d.omega(1, 0, 0, 1), 0.13, 1e-12);
}

TEST(Moments, ExactRecovery) {
  const Scenario sc = find_scenario("monotone-2");
  const MomentEstimates m = moment_estimators_two_trials(observed_distribution(cell_probabilities(sc.truth)), 0, 1);
  EXPECT_NEAR(m.delta[1][index(Stratum::SS)], 0.8, 1e-12);
  EXPECT_NEAR(m.delta[0][index(Stratum::SSbar)], 0.3, 1e-12);
  for (int z = 0; z < 2; ++z)
    for (Stratum u : kMonotoneStrata) EXPECT_NEAR(m.delta[z][index(u)], sc.truth.delta_of(z, u), 1e-12);
  EXPECT_FALSE(m.clamped);
}

TEST(Moments, IdenticalTrialsAreDegenerate) {
  ParameterSet p = find_scenario("monotone-2").truth;
  p.pi[1] = p.pi[0];
  try {
    moment_estimators_two_trials(observed_distribution(cell_probabilities(p)), 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ratio_degeneracy);
  }
}

TEST(RatioVariation, TwoTrialScenario) {
  const auto v = check_ratio_variation(find_scenario("monotone-2").truth.pi);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(v[0].a);
  EXPECT_TRUE(v[0].b);
}

TEST(RatioVariation, IdenticalTrials) {
  const StratumProbs pi{0.3, 0.3, 0.4, 0.0};
  const auto v = check_ratio_variation({pi, pi, pi});
  ASSERT_EQ(v.size(), 3u);
  for (const auto& x : v) {
    EXPECT_FALSE(x.a);
    EXPECT_FALSE(x.b);
  }
}

TEST(RatioVariation, ZeroStratumNoDivision) {
  const auto v = check_ratio_variation({StratumProbs{0.5, 0.0, 0.5, 0.0}, StratumProbs{0.2, 0.3, 0.5, 0.0}});
  EXPECT_TRUE(v[0].a);
  EXPECT_TRUE(v[0].b);
}

TEST(LocalIdentifiability, NonmonotoneTwoTrialsFails) {
  ParameterSet p(2, false);
  p.p = {0.5, 0.5};
  p.alpha = {0.4, 0.6};
  p.pi = {StratumProbs{0.5, 0.2, 0.2, 0.1}, StratumProbs{0.1, 0.3, 0.4, 0.2}};
  p.delta[1] = {0.8, 0.7, 0.6, 0.5};
  p.delta[0] = {0.5, 0.3, 0.1, 0.2};
  const IdentifiabilityReport r = local_identifiability(p);
  EXPECT_FALSE(r.full_rank);
  EXPECT_FALSE(r.necessary_condition);
}

TEST(LocalIdentifiability, ThreeTrialDesignIsFullRank) {
  const IdentifiabilityReport r = local_identifiability(fixtures::three_trials());
  EXPECT_TRUE(r.necessary_condition);
  EXPECT_TRUE(r.full_rank);
  EXPECT_EQ(r.jacobian_rank, r.n_params);
}

TEST(LocalIdentifiability, MonotoneIdenticalTrialsDeficient) {
  ParameterSet p = find_scenario("monotone-2").truth;
  p.pi[1] = p.pi[0];
  p.alpha[1] = p.alpha[0];
  EXPECT_FALSE(local_identifiability(p).full_rank);
}

TEST(LocalIdentifiability, ChartChoiceDoesNotMatter) {
  const ParameterSet t = fixtures::three_trials();
  EXPECT_EQ(local_identifiability(t, 0).jacobian_rank, local_identifiability(t, 1).jacobian_rank);
}

TEST(Inversion, KnownDesignRecoversPrintedTable) {
  InversionOptions o;
  o.monotone = false;
  o.known_design = fixtures::three_trials();
  const InversionResult inv = invert_population_system(fixtures::printed_table(), o);
  EXPECT_TRUE(inv.exact);
  const ParameterSet t = fixtures::three_trials();
  for (int z = 0; z < 2; ++z)
    for (Stratum u : kAllStrata) EXPECT_NEAR(inv.params.delta_of(z, u), t.delta_of(z, u), 1e-9);
}

TEST(Inversion, UnknownDesignMonotone) {
  const ParameterSet t = find_scenario("monotone-3").truth;
  InversionOptions o;
  o.monotone = true;
  o.n_starts = 4;
  const InversionResult inv = invert_population_system(trial_conditional(cell_probabilities(t)), o);
  EXPECT_LT(inv.residual_norm, 1e-10);
  for (int z = 0; z < 2; ++z)
    for (Stratum u : kMonotoneStrata) EXPECT_NEAR(inv.params.delta_of(z, u), t.delta_of(z, u), 1e-6);
}

TEST(Inversion, UnknownDesignNonmonotone) {
  InversionOptions o;
  o.monotone = false;
  const InversionResult inv = invert_population_system(fixtures::printed_table(), o);
  EXPECT_TRUE(inv.exact);
  const ParameterSet t = fixtures::three_trials();
  for (int z = 0; z < 2; ++z)
    for (Stratum u : kAllStrata) EXPECT_NEAR(inv.params.delta_of(z, u), t.delta_of(z, u), 1e-5);
}

TEST(Inversion, InconsistentInputFlagged) {
  CellProbabilities bad = fixtures::printed_table();
  // Move mass within each treated arm so no monotone model fits.
  for (std::size_t r = 0; r < 3; ++r) {
    bad(0, 1, 1, r) += 0.03;
    bad(0, 0, 0, r) -= 0.03;
  }
  InversionOptions o;
  o.monotone = true;
  o.n_starts = 3;
  const InversionResult inv = invert_population_system(bad, o);
  EXPECT_FALSE(inv.exact);
  EXPECT_FALSE(inv.warnings.empty());
}
