#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace effect_engine::verify {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Suite names accepted by run_suite, in acceptance order.
const std::vector<std::string>& suite_names();

/**
 * Runs one named acceptance suite (or "all") with the given seed and returns
 * one result per criterion. Suites:
 *   delta_identity  delta vector equals the baseline difference, bitwise
 *   group_means     no-covariate ATE and baselines equal arm means
 *   saturated       saturated-model CATE/HTE equal subgroup mean differences
 *   coverage        95% ATE interval coverage under heteroskedastic noise
 *   ratio           ratio moments, and Monte Carlo agreement of relative effects
 *   orthant         orthant integrator against closed forms and Monte Carlo
 */
std::vector<CriterionResult> run_suite(std::string_view name, std::uint64_t seed = 0);

}  // namespace effect_engine::verify
