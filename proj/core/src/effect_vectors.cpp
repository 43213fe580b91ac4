#include "effect_engine/effect_vectors.hpp"

#include <cmath>

#include "effect_engine/error.hpp"

namespace effect_engine {
namespace {

void check_profile(const ColumnSchema& schema, const CovariateProfile& profile) {
  if (profile.values.size() != schema.covariate_width())
    throw ValidationError("profile has " + std::to_string(profile.values.size()) +
                          " values, schema covariate block has " +
                          std::to_string(schema.covariate_width()));
  for (double v : profile.values) {
    if (!std::isfinite(v)) throw ValidationError("profile contains a non-finite value");
  }
}

// Writes the arm block and its interactions for arm column `a` scaled by `sign`.
void add_arm(const ColumnSchema& schema, const CovariateProfile& profile, std::size_t a,
             double sign, Eigen::VectorXd& out) {
  out(static_cast<Eigen::Index>(schema.arm_offset() + a)) += sign;
  if (!schema.has_interactions()) return;
  for (std::size_t c = 0; c < schema.covariate_width(); ++c)
    out(static_cast<Eigen::Index>(schema.interaction_index(c, a))) += sign * profile.values[c];
}

}  // namespace

CovariateProfile profile_from_subset(const Dataset& data, const ColumnSchema& schema,
                                     const Predicate& predicate, bool complement) {
  auto rows = select_rows(data, predicate, complement);
  if (rows.empty()) throw ValidationError("empty conditioning subset");
  Eigen::MatrixXd block = schema.expand_covariates(data);
  CovariateProfile profile;
  profile.values.assign(schema.covariate_width(), 0.0);
  for (std::size_t c = 0; c < schema.covariate_width(); ++c) {
    double sum = 0.0;
    for (auto i : rows) sum += block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    profile.values[c] = sum / static_cast<double>(rows.size());
  }
  return profile;
}

CovariateProfile global_profile(const Dataset& data, const ColumnSchema& schema) {
  return profile_from_subset(data, schema, Predicate::always());
}

EffectVector baseline_vector(const ColumnSchema& schema, const CovariateProfile& profile,
                             std::string_view arm) {
  check_profile(schema, profile);
  auto a = schema.arm_column(arm);
  EffectVector vec;
  vec.entries = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.size()));
  vec.entries(0) = 1.0;
  for (std::size_t c = 0; c < schema.covariate_width(); ++c)
    vec.entries(static_cast<Eigen::Index>(schema.covariate_offset() + c)) = profile.values[c];
  if (a) {
    vec.entries(static_cast<Eigen::Index>(schema.arm_offset() + *a)) = 1.0;
    if (schema.has_interactions()) {
      for (std::size_t c = 0; c < schema.covariate_width(); ++c)
        vec.entries(static_cast<Eigen::Index>(schema.interaction_index(c, *a))) = profile.values[c];
    }
  }
  vec.kind = VectorKind::baseline;
  vec.arm_to = std::string(arm);
  vec.profile = profile;
  return vec;
}

EffectVector delta_vector(const ColumnSchema& schema, const CovariateProfile& profile,
                          std::string_view arm_to, std::string_view arm_from) {
  check_profile(schema, profile);
  if (arm_to == arm_from)
    throw ValidationError("delta vector needs two different arms, got '" + std::string(arm_to) +
                          "' twice");
  auto to = schema.arm_column(arm_to);
  auto from = schema.arm_column(arm_from);
  EffectVector vec;
  vec.entries = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.size()));
  if (to) add_arm(schema, profile, *to, 1.0, vec.entries);
  if (from) add_arm(schema, profile, *from, -1.0, vec.entries);
  vec.kind = VectorKind::delta;
  vec.arm_to = std::string(arm_to);
  vec.arm_from = std::string(arm_from);
  vec.profile = profile;
  return vec;
}

EffectValue apply(const EffectVector& vec, const FittedModel& model) {
  return apply(vec.entries, model);
}

EffectValue apply(const Eigen::VectorXd& vec, const FittedModel& model) {
  if (vec.size() != model.beta.size())
    throw ValidationError("effect vector has length " + std::to_string(vec.size()) +
                          ", model has " + std::to_string(model.beta.size()) + " coefficients");
  EffectValue out;
  out.value = vec.dot(model.beta);
  out.variance = vec.dot(model.cov_beta * vec);
  if (out.variance < 0.0) {
    // Rounding scale of the quadratic form.
    const double scale = vec.cwiseAbs().dot(model.cov_beta.cwiseAbs() * vec.cwiseAbs());
    if (out.variance < -1e-12 * std::max(1.0, scale))
      throw NumericError("coefficient covariance is not positive semidefinite along the "
                         "requested effect vector");
    out.variance = 0.0;
  }
  return out;
}

double cross_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const FittedModel& model) {
  if (a.size() != model.beta.size() || b.size() != model.beta.size())
    throw ValidationError("effect vector length does not match the model");
  return a.dot(model.cov_beta * b);
}

}  // namespace effect_engine
