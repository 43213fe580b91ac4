#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/error.hpp"
#include "effect_engine/relative_effects.hpp"
#include "effect_engine/verify/oracles.hpp"
#include "fixtures.hpp"

using namespace effect_engine;

TEST(RatioMoments, HandCases) {
  auto degenerate = ratio_moments({1, 1, 0, 0, 0});
  EXPECT_EQ(degenerate.expectation, 1.0);
  EXPECT_EQ(degenerate.variance, 0.0);

  auto worked = ratio_moments({3, 2, 2, 1, -1});
  EXPECT_NEAR(worked.expectation, 2.125, 1e-12);
  EXPECT_NEAR(worked.variance, 1.8125, 1e-12);

  auto collapsed = ratio_moments({3, 4, 5, 0, 0});
  EXPECT_DOUBLE_EQ(collapsed.expectation, 0.75);
  EXPECT_DOUBLE_EQ(collapsed.variance, 5.0 / 16.0);

  EXPECT_THROW(ratio_moments({1, 0, 1, 1, 0}), NumericError);
}

TEST(RatioMoments, DefinedAtZeroNumerator) {
  auto m = ratio_moments({0, 2, 1, 0.5, 0.1});
  EXPECT_TRUE(std::isfinite(m.variance));
  EXPECT_NEAR(m.variance, 0.25, 1e-15);
}

TEST(RatioMoments, MatchesTextbookFormulaOnRandomInputs) {
  // Written out from the unsimplified form Var = (ER/ES)^2 (VarR/ER^2 - 2CovRS/(ER ES) + VarS/ES^2).
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3), pos(0.01, 2);
  for (int i = 0; i < 500; ++i) {
    const double er = u(rng), es = u(rng) + (u(rng) > 0 ? 4 : -4);
    const double vr = pos(rng), vs = pos(rng);
    const double cov = 0.9 * std::sqrt(vr * vs) * u(rng) / 3;
    const double e = er / es - cov / (es * es) + vs * er / (es * es * es);
    const double v = (er / es) * (er / es) * (vr / (er * er) - 2 * cov / (er * es) + vs / (es * es));
    auto m = ratio_moments({er, es, vr, vs, cov});
    EXPECT_NEAR(m.expectation, e, 1e-12 * std::max(1.0, std::abs(e)));
    if (!m.clamped) EXPECT_NEAR(m.variance, v, 1e-9 * std::max(1.0, std::abs(v)));
  }
}

TEST(RelativeEffect, NoiselessTenPercentLift) {
  Dataset data({100, 100, 110, 110}, {"c", "c", "t", "t"});
  auto m = fixtures::fit(data, CovarianceKind::classical, "c");
  auto r = relative_effect(m, data, "t", "c");
  EXPECT_NEAR(r.are, 0.10, 1e-14);
  EXPECT_NEAR(r.first_order, 0.10, 1e-14);
  EXPECT_EQ(r.variance, 0.0);
}

TEST(RelativeEffect, FourRowGuard) {
  auto data = fixtures::four_rows();
  auto m = fixtures::fit(data);
  // |ES| = 2 is only 2 standard deviations from zero.
  EXPECT_THROW(relative_effect(m, data, "1", "0"), NumericError);
  RatioOptions loose;
  loose.guard_multiplier = 1.0;
  auto r = relative_effect(m, data, "1", "0", Predicate::always(), loose);
  EXPECT_NEAR(r.components.er, 3, 1e-12);
  EXPECT_NEAR(r.components.es, 2, 1e-12);
  EXPECT_NEAR(r.components.var_r, 2, 1e-12);
  EXPECT_NEAR(r.components.var_s, 1, 1e-12);
  EXPECT_NEAR(r.components.cov_rs, -1, 1e-12);
  EXPECT_NEAR(r.are, 2.125, 1e-12);
  EXPECT_NEAR(r.variance, 1.8125, 1e-12);
  EXPECT_NEAR(r.first_order, 1.5, 1e-12);
}

TEST(RelativeEffect, ScaleEquivariant) {
  auto data = fixtures::random_two_arm(51);
  std::vector<double> scaled(data.outcome().begin(), data.outcome().end());
  for (auto& v : scaled) v *= 37.5;
  Dataset big(scaled, std::vector<std::string>(data.arms().begin(), data.arms().end()),
              data.covariates());
  auto a = relative_effect(fixtures::fit(data, CovarianceKind::hc1, "ctrl"), data, "treat", "ctrl");
  auto b = relative_effect(fixtures::fit(big, CovarianceKind::hc1, "ctrl"), big, "treat", "ctrl");
  EXPECT_NEAR(a.are, b.are, 1e-9);
  EXPECT_NEAR(a.variance, b.variance, 1e-9);
}

TEST(RelativeEffect, SubsetPredicate) {
  auto data = fixtures::random_two_arm(52);
  auto m = fixtures::fit(data, CovarianceKind::hc1, "ctrl");
  auto all = relative_effect(m, data, "treat", "ctrl");
  auto sub = relative_effect(m, data, "treat", "ctrl", Predicate::parse("x > 2"));
  EXPECT_NE(all.are, sub.are);
  EXPECT_EQ(sub.predicate, "x > 2");
}

TEST(RelativeEffect, AgreesWithMonteCarlo) {
  auto data = fixtures::random_two_arm(53, 60, 3.0);
  auto m = fixtures::fit(data, CovarianceKind::hc1, "ctrl");
  auto r = relative_effect(m, data, "treat", "ctrl");
  auto p = global_profile(data, m.schema);
  verify::OracleConfig config;
  config.mc_draws = 200'000;
  config.seed = 5;
  auto mc = verify::mc_ratio(m, delta_vector(m.schema, p, "treat", "ctrl").entries,
                             baseline_vector(m.schema, p, "ctrl").entries, config);
  EXPECT_LT(std::abs(mc.mean - r.are), 3 * mc.mc_se);
  EXPECT_LT(std::abs(mc.variance - r.variance), 0.1 * r.variance);
}
