#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "effect_engine/dataset.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine {

/// Moments of the numerator R = D'beta and denominator S = B(arm_from)'beta.
struct RatioComponents {
  double er = 0.0;
  double es = 0.0;
  double var_r = 0.0;
  double var_s = 0.0;
  double cov_rs = 0.0;
};

struct RatioMoments {
  double expectation = 0.0;
  double variance = 0.0;
  bool clamped = false;  // a slightly negative variance was rounded up to 0
};

/**
 * Second-order Taylor moments of R/S:
 *
 *   E(R/S)   = ER/ES - CovRS/ES^2 + VarS*ER/ES^3
 *   Var(R/S) = VarR/ES^2 - 2*ER*CovRS/ES^3 + ER^2*VarS/ES^4
 *
 * The variance is written without the ER^2/ER^2 factor so that it stays
 * defined when ER = 0. Throws NumericError when ES = 0.
 */
RatioMoments ratio_moments(const RatioComponents& c);

struct RatioOptions {
  /// Require |ES| > guard_multiplier * sqrt(VarS).
  double guard_multiplier = 5.0;
};

struct RatioEstimate {
  double are = 0.0;          // corrected expectation of R/S
  double variance = 0.0;
  double first_order = 0.0;  // ER / ES
  RatioComponents components;
  std::string arm_to;
  std::string arm_from;
  std::string predicate;
  std::vector<std::string> warnings;
};

/// Average relative effect of `arm_to` over `arm_from`, optionally at the
/// covariate means of a subset.
RatioEstimate relative_effect(const FittedModel& model, const Dataset& data,
                              std::string_view arm_to, std::string_view arm_from,
                              const Predicate& predicate = Predicate::always(),
                              const RatioOptions& options = {});

}  // namespace effect_engine
