#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psace.hpp"

using namespace psace;

namespace {

ObservedDistribution random_trial(RngStream& rng) {
  CellProbabilities joint(1);
  const std::vector<double> ones(4, 1.0);
  const double alpha = 0.2 + 0.6 * rng.uniform();
  for (int z = 0; z < 2; ++z) {
    const auto w = sample_dirichlet(std::span<const double>(ones), rng);
    const double arm = z == 1 ? alpha : 1.0 - alpha;
    joint(z, 1, 1, 0) = arm * w[0];
    joint(z, 1, 0, 0) = arm * w[1];
    joint(z, 0, 1, 0) = arm * w[2];
    joint(z, 0, 0, 0) = arm * w[3];
  }
  return observed_distribution(joint);
}

// One trial from (P(S=1|Z=1), Q11, Q10, P(S=1|Z=0), Q01, Q00) with equal arms.
ObservedDistribution trial_from(double p1, double q11, double q10, double p0, double q01, double q00) {
  CellProbabilities joint(1);
  joint(1, 1, 1, 0) = 0.5 * p1 * q11;
  joint(1, 1, 0, 0) = 0.5 * p1 * (1 - q11);
  joint(1, 0, 1, 0) = 0.5 * (1 - p1) * q10;
  joint(1, 0, 0, 0) = 0.5 * (1 - p1) * (1 - q10);
  joint(0, 1, 1, 0) = 0.5 * p0 * q01;
  joint(0, 1, 0, 0) = 0.5 * p0 * (1 - q01);
  joint(0, 0, 1, 0) = 0.5 * (1 - p0) * q00;
  joint(0, 0, 0, 0) = 0.5 * (1 - p0) * (1 - q00);
  return observed_distribution(joint);
}

}  // namespace

TEST(MixtureBounds, DegenerateWeight) {
  const Interval i = mixture_component_bounds(0.37, 1.0);
  EXPECT_DOUBLE_EQ(i.lower, 0.37);
  EXPECT_DOUBLE_EQ(i.upper, 0.37);
  EXPECT_FALSE(mixture_bounds(0.37, 1.0).second.has_value());
}

TEST(MixtureBounds, Uninformative) {
  const Interval i = mixture_component_bounds(0.5, 0.5);
  EXPECT_DOUBLE_EQ(i.lower, 0.0);
  EXPECT_DOUBLE_EQ(i.upper, 1.0);
}

TEST(MixtureBounds, HighSuccess) {
  const MixtureBounds b = mixture_bounds(0.9, 0.5);
  EXPECT_NEAR(b.first.lower, 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(b.first.upper, 1.0);
  EXPECT_NEAR(b.second->lower, 0.8, 1e-15);
}

TEST(MixtureBounds, ZeroWeightUndefined) {
  EXPECT_THROW(mixture_component_bounds(0.5, 0.0), Error);
}

TEST(MonotoneBounds, VanishingMixingStratumGivesPoint) {
  // P(S=1|Z=1) = P(S=1|Z=0): no SSbar units, SS is point identified.
  const ObservedDistribution d = trial_from(0.4, 0.7, 0.3, 0.4, 0.2, 0.6);
  const StratumBounds b = psace_bounds_monotone(d, 0).at(Stratum::SS);
  EXPECT_NEAR(b.lower, 0.5, 1e-12);
  EXPECT_NEAR(b.upper, 0.5, 1e-12);
  EXPECT_TRUE(b.informative);
}

TEST(MonotoneBounds, ZeroControlSuccessAmongNonResponders) {
  const ObservedDistribution d = trial_from(0.6, 0.7, 0.4, 0.3, 0.5, 0.0);
  const StratumBounds b = psace_bounds_monotone(d, 0).at(Stratum::SbarSbar);
  EXPECT_NEAR(b.lower, 0.4, 1e-12);
}

TEST(MonotoneBounds, MatchesGridOracle) {
  RngStream rng = RngStream::from_seed(21);
  int checked = 0;
  while (checked < 200) {
    const ObservedDistribution d = random_trial(rng);
    if (d.P(0, 1, 0) >= d.P(1, 1, 0)) continue;
    ++checked;
    const BoundsResult b = psace_bounds_monotone(d, 0);
    for (Stratum u : kMonotoneStrata) {
      const Interval g = fixtures::grid_oracle(d.trial(0), u, true, 0);
      EXPECT_NEAR(b.at(u).lower, g.lower, 1e-9);
      EXPECT_NEAR(b.at(u).upper, g.upper, 1e-9);
    }
  }
}

TEST(NonmonotoneBounds, SsVacuousWhenControlRespondersAreFew) {
  const ObservedDistribution d = trial_from(0.7, 0.6, 0.4, 0.2, 0.5, 0.3);
  ASSERT_LT(d.P(0, 1, 0), d.P(1, 0, 0));
  const StratumBounds b = psace_bounds_nonmonotone(d, 0).at(Stratum::SS);
  EXPECT_EQ(b.lower, -1.0);
  EXPECT_EQ(b.upper, 1.0);
  EXPECT_FALSE(b.informative);
}

TEST(NonmonotoneBounds, MatchesGridOracleAndContainsMonotone) {
  RngStream rng = RngStream::from_seed(22);
  for (int i = 0; i < 200; ++i) {
    const ObservedDistribution d = random_trial(rng);
    const BoundsResult non = psace_bounds_nonmonotone(d, 0);
    for (Stratum u : kAllStrata) {
      const Interval g = fixtures::grid_oracle(d.trial(0), u, false, 10000);
      EXPECT_NEAR(non.at(u).lower, g.lower, 1e-9);
      EXPECT_NEAR(non.at(u).upper, g.upper, 1e-9);
    }
    if (d.P(0, 1, 0) >= d.P(1, 1, 0)) continue;
    const BoundsResult mono = psace_bounds_monotone(d, 0);
    for (Stratum u : kMonotoneStrata) {
      EXPECT_LE(non.at(u).lower, mono.at(u).lower + 1e-12);
      EXPECT_GE(non.at(u).upper, mono.at(u).upper - 1e-12);
    }
  }
}

TEST(Bounds, TruthLiesInside) {
  const ParameterSet t = fixtures::three_trials();
  const ObservedDistribution d = observed_distribution(cell_probabilities(t));
  for (std::size_t r = 0; r < 3; ++r) {
    const BoundsResult b = psace_bounds_nonmonotone(d, r);
    for (Stratum u : kAllStrata) {
      EXPECT_LE(b.at(u).lower, t.ace(u) + 1e-12);
      EXPECT_GE(b.at(u).upper, t.ace(u) - 1e-12);
    }
  }
}

TEST(Bounds, MonotoneWarnsWhenIncompatible) {
  const ObservedDistribution d = trial_from(0.3, 0.5, 0.5, 0.6, 0.5, 0.5);
  EXPECT_FALSE(psace_bounds_monotone(d, 0).warnings.empty());
}

TEST(Bootstrap, DegenerateCountsGivePointBounds) {
  ObservedCounts c(1);
  c(1, 1, 1, 0) = 40;
  c(0, 0, 0, 0) = 30;
  const BoundsResult point = psace_bounds_monotone(observed_distribution(c), 0);
  const BoundsResult boot = bootstrap_bounds(c, 0, true, 1, 9);
  for (const auto& b : boot.strata) {
    if (!point.at(b.stratum).informative) continue;
    EXPECT_DOUBLE_EQ(b.ci_lower, point.at(b.stratum).lower);
    EXPECT_DOUBLE_EQ(b.ci_upper, point.at(b.stratum).upper);
  }
}

TEST(Bootstrap, LargeSampleCiCoversPopulationBounds) {
  const ObservedCounts c = fixtures::printed_counts(10000.0);
  const ObservedDistribution pop = observed_distribution(fixtures::printed_table());
  for (std::size_t r = 0; r < 3; ++r) {
    const BoundsResult boot = bootstrap_bounds(c, r, false, 2000, 17);
    const BoundsResult exact = psace_bounds_nonmonotone(pop, r);
    for (const auto& b : boot.strata) {
      EXPECT_LE(b.ci_lower, exact.at(b.stratum).lower + 1e-9) << name(b.stratum) << " trial " << r + 1;
      EXPECT_GE(b.ci_upper, exact.at(b.stratum).upper - 1e-9) << name(b.stratum) << " trial " << r + 1;
      EXPECT_GT(b.ci_lower, exact.at(b.stratum).lower - 0.2);
      EXPECT_LT(b.ci_upper, exact.at(b.stratum).upper + 0.2);
    }
  }
}

TEST(Bootstrap, Deterministic) {
  const ObservedCounts c = fixtures::printed_counts();
  const BoundsResult a = bootstrap_bounds(c, 1, true, 200, 5);
  const BoundsResult b = bootstrap_bounds(c, 1, true, 200, 5);
  for (std::size_t i = 0; i < a.strata.size(); ++i) {
    EXPECT_EQ(a.strata[i].ci_lower, b.strata[i].ci_lower);
    EXPECT_EQ(a.strata[i].ci_upper, b.strata[i].ci_upper);
  }
}
