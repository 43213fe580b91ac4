#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/error.hpp"
#include "effect_engine/verify/oracles.hpp"
#include "effect_engine/verify/suites.hpp"
#include "fixtures.hpp"

using namespace effect_engine;
using namespace effect_engine::verify;

TEST(ReferenceCdf, KnownValues) {
  EXPECT_NEAR(reference_normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(reference_normal_cdf(1.0), 0.8413447460685429, 1e-14);
  EXPECT_NEAR(reference_normal_cdf(-1.959963984540054), 0.025, 1e-14);
  EXPECT_NEAR(reference_normal_cdf(4.0), 0.9999683287581669, 1e-14);
  EXPECT_NEAR(reference_normal_cdf(-8.0), 6.22096057427178e-16, 1e-28);
  for (double x = -6; x <= 6; x += 0.37)
    EXPECT_NEAR(reference_normal_cdf(x) + reference_normal_cdf(-x), 1.0, 1e-14) << x;
}

TEST(BivariateOrthant, ClosedForm) {
  EXPECT_NEAR(bivariate_orthant(0.5), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(bivariate_orthant(0.0), 0.25, 1e-15);
}

TEST(CounterNormal, PartitionIndependentMoments) {
  CounterNormal z(3);
  EXPECT_EQ(z(12345), CounterNormal(3)(12345));
  EXPECT_NE(z(12345), CounterNormal(4)(12345));
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = z(static_cast<std::uint64_t>(i));
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(ReferenceCholesky, FactorsAndJitters) {
  Eigen::Matrix3d a;
  a << 4, 2, 0.4, 2, 5, 1, 0.4, 1, 3;
  auto l = reference_cholesky(a);
  EXPECT_LT((l * l.transpose() - a).cwiseAbs().maxCoeff(), 1e-14);
  auto s = reference_cholesky(Eigen::Matrix2d::Ones());
  EXPECT_TRUE(s.allFinite());
}

TEST(PairwiseSum, ExactOnSmallIntegers) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(pairwise_sum(v), 499500.0);
}

TEST(GroupMeans, Examples) {
  auto data = fixtures::four_rows();
  EXPECT_EQ(group_means_effects(data, "1", "0"), 3.0);
  EXPECT_EQ(group_mean(data, "1"), 5.0);
  Dataset equal({1, 3, 3, 1}, {"a", "a", "b", "b"});
  EXPECT_EQ(group_means_effects(equal, "b", "a"), 0.0);
  Dataset with_x({1, 3, 4, 6}, {"0", "0", "1", "1"},
                 {CovariateColumn{"x", std::vector<double>{0, 0, 1, 1}}});
  EXPECT_THROW(group_means_effects(with_x, "1", "0", Predicate::parse("x == 1")), ValidationError);
}

TEST(OracleConfig, RequiresEnoughDraws) {
  OracleConfig c;
  c.mc_draws = 9999;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(McRatio, ZeroCovarianceIsExact) {
  Dataset data({100, 100, 110, 110}, {"c", "c", "t", "t"});
  auto m = fixtures::fit(data, CovarianceKind::classical, "c");
  OracleConfig config;
  config.mc_draws = 10'000;
  auto r = mc_ratio(m, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), config);
  EXPECT_EQ(r.mean, m.beta(1) / m.beta(0));
  EXPECT_EQ(r.variance, 0.0);
}

TEST(McRatio, RefusesOutsideGuard) {
  auto m = fixtures::fit(fixtures::four_rows());
  OracleConfig config;
  config.mc_draws = 10'000;
  EXPECT_THROW(mc_ratio(m, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), config), ValidationError);
}

TEST(McRatio, SeedsAgreeWithinError) {
  auto m = fixtures::fit(fixtures::four_rows());
  m.cov_beta /= 100.0;  // keep the denominator well inside the guard
  OracleConfig a, b;
  a.mc_draws = b.mc_draws = 100'000;
  b.seed = 1;
  auto ra = mc_ratio(m, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), a);
  auto rb = mc_ratio(m, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), b);
  EXPECT_NE(ra.mean, rb.mean);
  EXPECT_LT(std::abs(ra.mean - rb.mean), 3 * std::hypot(ra.mc_se, rb.mc_se));
}

TEST(McOrthant, Examples) {
  OracleConfig config;
  config.mc_draws = 200'000;
  auto one = mc_orthant(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), config);
  EXPECT_LT(std::abs(one.prob - 0.5), 3 * one.mc_se);
  auto two = mc_orthant(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), config);
  EXPECT_LT(std::abs(two.prob - 0.25), 3 * two.mc_se);
  Eigen::Matrix2d rho;
  rho << 1, 0.5, 0.5, 1;
  auto corr = mc_orthant(Eigen::VectorXd::Zero(2), rho, config);
  EXPECT_LT(std::abs(corr.prob - 1.0 / 3.0), 3 * corr.mc_se);
  EXPECT_THROW(mc_orthant(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3), config),
               ValidationError);
}

TEST(Suites, NamesAndUnknown) {
  EXPECT_EQ(suite_names().size(), 6u);
  EXPECT_THROW(run_suite("bogus"), ValidationError);
  auto r = run_suite("delta_identity", 3);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0].passed) << r[0].detail;
}
