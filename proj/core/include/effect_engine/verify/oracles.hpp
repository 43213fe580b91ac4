#pragma once

// Brute-force reference computations for tests and acceptance runs. Nothing on
// the production path may depend on this header: the normal CDF, the normal
// sampler and the Cholesky factorization here are separate implementations.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "effect_engine/dataset.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine::verify {

struct OracleConfig {
  std::size_t mc_draws = 1'000'000;
  std::uint64_t seed = 0;
  /// Agreement band, in Monte Carlo standard errors.
  double sigma_multiple = 3.0;
  /// The ratio oracle shares the delta method's validity region.
  double guard_multiplier = 5.0;

  void validate() const;
};

/// Standard normal CDF from the Taylor series near 0 and the Laplace
/// continued fraction in the tails.
double reference_normal_cdf(double x);

/// P(Z1 > 0, Z2 > 0) for a standard bivariate normal with correlation rho.
double bivariate_orthant(double rho);

/// Standard normals from Box-Muller over a counter-based generator: draw i
/// depends only on (seed, i), never on how draws are partitioned.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}
  double operator()(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

/// Lower Cholesky factor by the textbook recurrence, with jitter
/// 1e-10 * trace / m when the matrix is singular.
Eigen::MatrixXd reference_cholesky(const Eigen::MatrixXd& a);

/// Sum with pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

/// Difference of arm sample means on the rows selected by `predicate`.
/// Throws when either arm is empty on that subset.
double group_means_effects(const Dataset& data, std::string_view arm_to, std::string_view arm_from,
                           const Predicate& predicate = Predicate::always());

/// Sample mean of the outcome in one arm.
double group_mean(const Dataset& data, std::string_view arm,
                  const Predicate& predicate = Predicate::always());

struct McRatio {
  double mean = 0.0;
  double variance = 0.0;
  double mc_se = 0.0;  // standard error of `mean`
};

/// Moments of d'beta / b'beta for beta ~ N(model.beta, model.cov_beta).
McRatio mc_ratio(const FittedModel& model, const Eigen::VectorXd& d, const Eigen::VectorXd& b,
                 const OracleConfig& config);

struct McOrthant {
  double prob = 0.0;
  double mc_se = 0.0;
};

/// Fraction of N(mu, sigma) draws with every component positive.
McOrthant mc_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                     const OracleConfig& config);

}  // namespace effect_engine::verify
