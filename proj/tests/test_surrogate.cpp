#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "psace.hpp"

using namespace psace;

namespace {

PosteriorDraws constant_draws(double ace_ss, double ace_ssbar, double ace_sbarsbar) {
  PosteriorDraws::Meta meta{true, 1, 2, 0, 0, 1, 0};
  PosteriorDraws d(meta);
  ParameterSet p(1, true);
  p.p = {1.0};
  p.alpha = {0.5};
  p.pi[0] = {0.3, 0.4, 0.3, 0.0};
  p.delta[0] = {0.3, 0.2, 0.3, 0.0};
  p.delta[1] = {0.3 + ace_ss, 0.2 + ace_ssbar, 0.3 + ace_sbarsbar, 0.0};
  for (std::size_t c = 0; c < 2; ++c)
    for (int i = 0; i < 20; ++i) d.push(c, p);
  return d;
}

}  // namespace

TEST(PredictMonotone, Examples) {
  EXPECT_NEAR(predict_ace_y_monotone(0.2, 0.5), 0.10, 1e-15);
  EXPECT_EQ(predict_ace_y_monotone(0.0, 0.37), 0.0);
  EXPECT_EQ(predict_ace_y_monotone(1.0, 0.37), 0.37);
}

TEST(PredictBounds, Examples) {
  const Interval a = predict_ace_y_bounds(0.2, 0.5, -0.4);
  EXPECT_NEAR(a.lower, 0.10, 1e-15);
  EXPECT_NEAR(a.upper, 0.14, 1e-15);
  const Interval b = predict_ace_y_bounds(0.2, 0.5, 0.5);
  EXPECT_NEAR(b.lower, 0.10, 1e-15);
  EXPECT_NEAR(b.upper, 0.5, 1e-15);
  const Interval c = predict_ace_y_bounds(1.0, 0.3, -0.1);
  EXPECT_NEAR(c.lower, 0.3, 1e-15);
  EXPECT_NEAR(c.upper, 0.3, 1e-15);
}

TEST(PredictBounds, OracleOverFeasibleStrata) {
  // ACE^Y = pi_SSbar a + pi_SbarS b with pi_SSbar - pi_SbarS = s, both in [0, 1],
  // pi_SSbar + pi_SbarS <= 1: scan pi_SbarS.
  RngStream rng = RngStream::from_seed(3);
  for (int k = 0; k < 500; ++k) {
    const double s = 0.01 + 0.98 * rng.uniform();
    const double a = 2.0 * rng.uniform() - 1.0, b = 2.0 * rng.uniform() - 1.0;
    double lo = 1e9, hi = -1e9;
    const double t_max = (1.0 - s) / 2.0;
    for (int i = 0; i <= 20000; ++i) {
      const double t = t_max * i / 20000.0;
      const double v = (s + t) * a + t * b;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const Interval iv = predict_ace_y_bounds(s, a, b);
    EXPECT_NEAR(std::min(iv.lower, iv.upper), lo, 1e-12);
    EXPECT_NEAR(std::max(iv.lower, iv.upper), hi, 1e-12);
  }
}

TEST(PredictBounds, RequiresPositiveSurrogateEffect) { EXPECT_THROW(predict_ace_y_bounds(0.0, 0.5, 0.1), Error); }

TEST(SignConclusion, Examples) {
  EXPECT_EQ(sign_conclusion(Sign::positive, 0.5, -0.4, false), SignConclusion::positive);
  EXPECT_EQ(sign_conclusion(Sign::zero, 0.5, 0.0, true), SignConclusion::zero);
  EXPECT_EQ(sign_conclusion(Sign::positive, 0.4, -0.6, false), SignConclusion::indeterminate);
  EXPECT_EQ(sign_conclusion(Sign::positive, 0.4, 0.0, true), SignConclusion::positive);
  EXPECT_EQ(sign_conclusion(Sign::negative, 0.4, 0.0, true), SignConclusion::indeterminate);
}

TEST(Paradox, ValidationTrial) {
  const StratumProbs ace{0.0, 0.4, 0.0, -0.6};
  const ParadoxReport r = paradox_check(StratumProbs{0.2, 0.4, 0.2, 0.2}, ace);
  EXPECT_NEAR(r.ace_s, 0.2, 1e-15);
  EXPECT_NEAR(r.ace_y, 0.04, 1e-15);
  EXPECT_FALSE(r.paradox);
}

TEST(Paradox, NewTrial) {
  const StratumProbs ace{0.0, 0.4, 0.0, -0.6};
  const ParadoxReport r = paradox_check(StratumProbs{0.1, 0.4, 0.2, 0.3}, ace);
  EXPECT_NEAR(r.ace_s, 0.1, 1e-15);
  EXPECT_NEAR(r.ace_y, -0.02, 1e-15);
  EXPECT_TRUE(r.paradox);
}

TEST(Paradox, NoEffects) {
  const ParadoxReport r = paradox_check(StratumProbs{0.1, 0.4, 0.2, 0.3}, StratumProbs{});
  EXPECT_EQ(r.ace_y, 0.0);
  EXPECT_FALSE(r.paradox);
}

TEST(Paradox, FromParameters) {
  const ParameterSet t = fixtures::three_trials();
  const ParadoxReport r = paradox_check(t, 2);
  EXPECT_NEAR(r.ace_s, -0.1, 1e-12);
  EXPECT_FALSE(r.paradox);
}

TEST(Verdict, DegenerateDraws) {
  const SurrogateVerdict v = evaluate_surrogate(constant_draws(0.0, 0.4, 0.0));
  EXPECT_TRUE(v.necessity(Stratum::SS));
  EXPECT_TRUE(v.necessity(Stratum::SbarSbar));
  EXPECT_TRUE(v.sufficiency(Stratum::SSbar));
  EXPECT_THROW(v.interval(Stratum::SbarS), Error);
}

TEST(Verdict, LargeSampleRejectsNecessity) {
  GibbsOptions g;
  g.iterations = 6000;
  g.burn_in = 1000;
  g.seed = 5;
  const GibbsResult post = run_gibbs(generate_dataset(find_scenario("monotone-3", 2000), 6), g);
  const SurrogateVerdict v = evaluate_surrogate(post.draws);
  EXPECT_FALSE(v.necessity(Stratum::SS));
  EXPECT_TRUE(v.sufficiency(Stratum::SSbar));
}

TEST(SignPosterior, MatchesDrawwiseRule) {
  const SignPosterior sp = sign_posterior(constant_draws(0.0, 0.4, 0.0), Sign::positive);
  EXPECT_EQ(sp.positive, 1.0);
  EXPECT_EQ(sp.indeterminate, 0.0);
}
