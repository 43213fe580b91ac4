#include "effect_engine/relative_effects.hpp"

#include <cmath>

#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/error.hpp"

namespace effect_engine {

RatioMoments ratio_moments(const RatioComponents& c) {
  if (c.es == 0.0) throw NumericError("ratio denominator has zero expectation");
  const double es2 = c.es * c.es;
  const double es3 = es2 * c.es;
  RatioMoments m;
  m.expectation = c.er / c.es - c.cov_rs / es2 + c.var_s * c.er / es3;
  m.variance = c.var_r / es2 - 2.0 * c.er * c.cov_rs / es3 + c.er * c.er * c.var_s / (es2 * es2);
  if (m.variance < 0.0) {
    m.variance = 0.0;
    m.clamped = true;
  }
  return m;
}

RatioEstimate relative_effect(const FittedModel& model, const Dataset& data,
                              std::string_view arm_to, std::string_view arm_from,
                              const Predicate& predicate, const RatioOptions& options) {
  auto profile = profile_from_subset(data, model.schema, predicate);
  auto delta = delta_vector(model.schema, profile, arm_to, arm_from);
  auto base = baseline_vector(model.schema, profile, arm_from);

  auto r = apply(delta, model);
  auto s = apply(base, model);
  RatioComponents c{r.value, s.value, r.variance, s.variance,
                    cross_covariance(delta.entries, base.entries, model)};

  if (c.es == 0.0) throw NumericError("baseline too close to zero for delta-method ratio");
  if (!(std::abs(c.es) > options.guard_multiplier * std::sqrt(c.var_s)))
    throw NumericError("baseline too close to zero for delta-method ratio (|E(S)| = " +
                       std::to_string(std::abs(c.es)) + ", sd(S) = " +
                       std::to_string(std::sqrt(c.var_s)) + ")");

  auto m = ratio_moments(c);
  RatioEstimate out;
  out.are = m.expectation;
  out.variance = m.variance;
  out.first_order = c.er / c.es;
  out.components = c;
  out.arm_to = std::string(arm_to);
  out.arm_from = std::string(arm_from);
  out.predicate = predicate.to_string();
  if (m.clamped) out.warnings.push_back("negative ratio variance from rounding clamped to 0");
  return out;
}

}  // namespace effect_engine
