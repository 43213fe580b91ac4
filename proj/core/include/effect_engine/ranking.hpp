#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "effect_engine/dataset.hpp"
#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine {

struct OrthantOptions {
  /// Target for the reported error bound (three standard errors).
  double tol = 5e-4;
  std::uint64_t seed = 0;
  /// Hard cap on integrand evaluations across all randomizations.
  std::size_t max_points = std::size_t{1} << 24;
  /// 0 means default_workers().
  unsigned workers = 0;
};

struct OrthantResult {
  double prob = 0.0;
  double error = 0.0;  // three standard errors over the random shifts
  std::size_t points = 0;
};

/**
 * P(Z > 0 componentwise) for Z ~ N(mu, sigma).
 *
 * One dimension uses the normal CDF directly. Otherwise the problem is
 * rewritten as P(Y <= mu), Y ~ N(0, sigma), and integrated with Genz's
 * separation-of-variables transform over a randomly shifted rank-1 lattice.
 * The number of lattice points doubles until the error bound meets `tol` or
 * the point budget runs out. Results are reproducible for a fixed seed and
 * do not depend on the worker count.
 */
OrthantResult mvn_orthant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                          const OrthantOptions& options = {});

struct PositiveProbability {
  double prob = 0.0;
  double error = 0.0;
};

/// Posterior probability that D(arm_to, arm_from)'beta > 0.
PositiveProbability prob_positive(const FittedModel& model, const Dataset& data,
                                  std::string_view arm_to, std::string_view arm_from,
                                  const Predicate& predicate = Predicate::always());

/// One delta-vector row per comparison.
struct StackedDelta {
  Eigen::MatrixXd matrix;
  std::vector<std::pair<std::string, std::string>> comparisons;
};

/// Rows D(candidate, other) for every other arm, in the order given.
StackedDelta stack_deltas(const ColumnSchema& schema, const CovariateProfile& profile,
                          std::string_view candidate, const std::vector<std::string>& others);

enum class RankingMethod { closed_form_1d, qmc };

std::string_view to_string(RankingMethod method);

struct ArmProbability {
  std::string arm;
  double prob_best = 0.0;
  double integration_error = 0.0;
};

struct RankingResult {
  std::vector<ArmProbability> arms;
  RankingMethod method = RankingMethod::closed_form_1d;
};

/// Posterior probability that each arm beats every other listed arm.
RankingResult prob_best(const FittedModel& model, const Dataset& data,
                        const std::vector<std::string>& arms,
                        const Predicate& predicate = Predicate::always(),
                        const OrthantOptions& options = {});

}  // namespace effect_engine
