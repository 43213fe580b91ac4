#include "effect_engine/absolute_effects.hpp"

#include <algorithm>
#include <cmath>

#include "effect_engine/effect_vectors.hpp"
#include "effect_engine/error.hpp"
#include "effect_engine/normal.hpp"

namespace effect_engine {
namespace {

EffectQuery make_query(std::string type, std::string_view to, std::string_view from,
                       const Predicate& predicate) {
  return EffectQuery{std::move(type), std::string(to), std::string(from), predicate.to_string(),
                     std::nullopt};
}

EffectEstimate conditional(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                           std::string_view arm_from, const Predicate& predicate,
                           double ci_level, EffectQuery query) {
  auto profile = profile_from_subset(data, model.schema, predicate);
  auto value = apply(delta_vector(model.schema, profile, arm_to, arm_from), model);
  return make_estimate(value.value, value.variance, ci_level, std::move(query));
}

}  // namespace

EffectEstimate make_estimate(double estimate, double variance, double ci_level,
                             EffectQuery query) {
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw ValidationError("confidence level must lie in (0, 1)");
  EffectEstimate out;
  out.estimate = estimate;
  out.std_error = std::sqrt(std::max(variance, 0.0));
  const double half = normal_quantile(0.5 + 0.5 * ci_level) * out.std_error;
  out.ci_low = estimate - half;
  out.ci_high = estimate + half;
  out.ci_level = ci_level;
  out.query = std::move(query);
  return out;
}

EffectEstimate ate(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                   std::string_view arm_from, double ci_level) {
  return conditional(model, data, arm_to, arm_from, Predicate::always(), ci_level,
                     make_query("ate", arm_to, arm_from, Predicate::always()));
}

EffectEstimate cate(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                    std::string_view arm_from, const Predicate& predicate, double ci_level) {
  return conditional(model, data, arm_to, arm_from, predicate, ci_level,
                     make_query("cate", arm_to, arm_from, predicate));
}

EffectEstimate hte(const FittedModel& model, const Dataset& data, std::string_view arm_to,
                   std::string_view arm_from, const Predicate& predicate, double ci_level) {
  auto inside = profile_from_subset(data, model.schema, predicate, false);
  auto outside = profile_from_subset(data, model.schema, predicate, true);
  Eigen::VectorXd contrast = delta_vector(model.schema, inside, arm_to, arm_from).entries -
                             delta_vector(model.schema, outside, arm_to, arm_from).entries;
  auto value = apply(contrast, model);
  return make_estimate(value.value, value.variance, ci_level,
                       make_query("hte", arm_to, arm_from, predicate));
}

std::vector<EffectEstimate> dte(const FittedModel& model, const Dataset& data,
                                std::string_view arm_to, std::string_view arm_from,
                                std::span<const std::int64_t> periods, double ci_level) {
  if (model.posterior || model.covariance_kind != CovarianceKind::cluster)
    throw ValidationError("time-dynamic effects require cluster-robust covariance");
  if (!data.has_periods()) throw ValidationError("time-dynamic effects need a period column");
  const auto known = data.distinct_periods();
  if (known.size() >= 2 && model.schema.find_encoding(data.period_name()) == nullptr)
    throw ValidationError("model was fitted without the period encoding");

  std::vector<EffectEstimate> out;
  out.reserve(periods.size());
  for (auto t : periods) {
    if (!std::binary_search(known.begin(), known.end(), t))
      throw ValidationError("unknown period " + std::to_string(t));
    Predicate at_period({Condition{data.period_name(), CompareOp::eq, static_cast<double>(t)}});
    auto query = make_query("dte", arm_to, arm_from, at_period);
    query.period = t;
    out.push_back(conditional(model, data, arm_to, arm_from, at_period, ci_level, std::move(query)));
  }
  return out;
}

}  // namespace effect_engine
