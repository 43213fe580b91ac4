#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "effect_engine/dataset.hpp"
#include "effect_engine/model.hpp"
#include "effect_engine/predicate.hpp"

namespace effect_engine {

/// Values for the expanded covariate block, one per design covariate column.
struct CovariateProfile {
  std::vector<double> values;
};

enum class VectorKind {
  baseline,  // B(arm): model-implied mean outcome under one arm
  delta,     // D(arm_to, arm_from) = B(arm_to) - B(arm_from)
  contrast,  // difference of two delta vectors at different profiles
};

struct EffectVector {
  Eigen::VectorXd entries;
  VectorKind kind = VectorKind::baseline;
  std::string arm_to;    // the arm, for baselines
  std::string arm_from;  // empty for baselines
  CovariateProfile profile;
};

struct EffectValue {
  double value = 0.0;
  double variance = 0.0;
};

/// Column means of the expanded covariate block over the rows selected by
/// `predicate` (or its complement). Indicator columns therefore average to
/// level frequencies.
CovariateProfile profile_from_subset(const Dataset& data, const ColumnSchema& schema,
                                     const Predicate& predicate, bool complement = false);

/// Global covariate means.
CovariateProfile global_profile(const Dataset& data, const ColumnSchema& schema);

/// `[1 | profile | onehot(arm) | profile (x) onehot(arm)]`. The reference arm
/// has an all-zero one-hot block.
EffectVector baseline_vector(const ColumnSchema& schema, const CovariateProfile& profile,
                             std::string_view arm);

/// `[0 | 0 | onehot(to) - onehot(from) | profile (x) (onehot(to) - onehot(from))]`,
/// computed in closed form.
EffectVector delta_vector(const ColumnSchema& schema, const CovariateProfile& profile,
                          std::string_view arm_to, std::string_view arm_from);

/// value = v' beta, variance = v' Cov(beta) v.
EffectValue apply(const EffectVector& vec, const FittedModel& model);
EffectValue apply(const Eigen::VectorXd& vec, const FittedModel& model);

/// a' Cov(beta) b.
double cross_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const FittedModel& model);

}  // namespace effect_engine
