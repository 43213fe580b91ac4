#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "effect_engine/dataset.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine {

struct EffectQuery {
  std::string type;  // ate | cate | hte | dte
  std::string arm_to;
  std::string arm_from;
  std::string predicate;
  std::optional<std::int64_t> period;
};

/// Point estimate with a normal-quantile confidence interval.
struct EffectEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_level = 0.95;
  EffectQuery query;
};

/// Average treatment effect: delta vector at the global covariate means.
EffectEstimate ate(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                   std::string_view arm_from, double ci_level = 0.95);

/// Conditional effect: delta vector at the covariate means of the rows
/// selected by `predicate`.
EffectEstimate cate(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                    std::string_view arm_from, const Predicate& predicate,
                    double ci_level = 0.95);

/// Heterogeneous effect: CATE on the subset minus CATE on its complement.
/// The standard error comes from the quadratic form on the contrast vector
/// D(subset) - D(complement).
EffectEstimate hte(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                   std::string_view arm_from, const Predicate& predicate,
                   double ci_level = 0.95);

/// Per-period effects. Requires a cluster-robust fit; periods must appear in
/// the data.
std::vector<EffectEstimate> dte(const FittedModel& model, const Dataset& data,
                                std::string_view arm_to, std::string_view arm_from,
                                std::span<const std::int64_t> periods, double ci_level = 0.95);

/// Builds the interval from an estimate and its variance.
EffectEstimate make_estimate(double estimate, double variance, double ci_level,
                             EffectQuery query);

}  // namespace effect_engine
