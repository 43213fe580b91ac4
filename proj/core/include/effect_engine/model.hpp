#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "effect_engine/dataset.hpp"

namespace effect_engine {

enum class CovarianceKind { classical, hc1, cluster };

std::string_view to_string(CovarianceKind kind);
CovarianceKind parse_covariance_kind(std::string_view text);

enum class Encoding {
  automatic,    // numeric columns pass through, label columns go one-hot
  numeric,
  categorical,  // one-hot, first level dropped
};

/// Conjugate normal prior with known noise variance.
struct BayesPrior {
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_covariance;
  double noise_variance = 1.0;
};

struct ModelSpec {
  std::string reference_arm;
  std::map<std::string, Encoding, std::less<>> encodings;
  /// Always on for the `[1 | X | W | X*W]` layout; switching it off drops the
  /// interaction block.
  bool interactions = true;
  /// Encode the period column, when present with >= 2 distinct values, as a
  /// categorical covariate.
  bool include_period = true;
  CovarianceKind covariance_kind = CovarianceKind::hc1;
  std::optional<BayesPrior> bayes;
};

/// How one raw covariate expands into design columns.
struct CovariateEncoding {
  std::string name;
  bool categorical = false;
  bool from_period = false;
  /// Every observed level in encoding order; levels[0] is the dropped
  /// reference. Empty for numeric covariates.
  std::vector<std::string> levels;

  /// Number of design columns this covariate contributes.
  std::size_t width() const { return categorical ? levels.size() - 1 : 1; }
};

enum class ColumnKind { intercept, covariate, arm, interaction };

struct ColumnDescriptor {
  ColumnKind kind = ColumnKind::intercept;
  std::string covariate;             // covariate and interaction columns
  std::optional<std::string> level;  // one-hot covariate columns
  std::string arm;                   // arm and interaction columns

  std::string label() const;
};

/**
 * Column layout of the interacted design `[1 | X | W | X*W]`.
 *
 * Arms are one-hot encoded against the reference arm, so k arms give k-1 arm
 * columns. The interaction block is covariate-major: the column for expanded
 * covariate c and arm column a sits at interaction_offset() + c * arm_width() + a.
 */
class ColumnSchema {
 public:
  ColumnSchema(std::vector<CovariateEncoding> encodings, std::vector<std::string> arms,
               std::string reference_arm, bool interactions = true);

  std::size_t size() const { return columns_.size(); }
  const std::vector<ColumnDescriptor>& columns() const { return columns_; }
  std::vector<std::string> labels() const;

  std::size_t covariate_offset() const { return 1; }
  std::size_t covariate_width() const { return covariate_width_; }
  std::size_t arm_offset() const { return 1 + covariate_width_; }
  std::size_t arm_width() const { return arms_.size() - 1; }
  std::size_t interaction_offset() const { return arm_offset() + arm_width(); }
  bool has_interactions() const { return interactions_; }
  std::size_t interaction_index(std::size_t covariate_column, std::size_t arm_column) const;

  const std::string& reference_arm() const { return reference_arm_; }
  /// All arms, reference first, then the remaining arms in sorted order.
  const std::vector<std::string>& arms() const { return arms_; }
  bool has_arm(std::string_view arm) const;
  /// Position within the arm block, or nullopt for the reference arm. Throws
  /// ValidationError for an unknown arm.
  std::optional<std::size_t> arm_column(std::string_view arm) const;

  const std::vector<CovariateEncoding>& encodings() const { return encodings_; }
  const CovariateEncoding* find_encoding(std::string_view name) const;

  /// The covariate block for every row of `data` (n x covariate_width()).
  Eigen::MatrixXd expand_covariates(const Dataset& data) const;

 private:
  std::vector<CovariateEncoding> encodings_;
  std::vector<std::string> arms_;
  std::string reference_arm_;
  bool interactions_;
  std::size_t covariate_width_ = 0;
  std::vector<ColumnDescriptor> columns_;
};

struct DesignMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  ColumnSchema schema;
  /// Copied from the dataset's unit ids, when present.
  std::optional<std::vector<std::string>> cluster_ids;
  std::vector<std::string> warnings;
};

/// Builds the interacted design matrix. Categorical levels are ordered
/// alphabetically for label columns and numerically for numeric columns or the
/// period; the first level is dropped.
DesignMatrix build_design(const Dataset& data, const ModelSpec& spec);

/// Coefficient estimates bound to their column schema. Immutable once built.
struct FittedModel {
  ColumnSchema schema;
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov_beta;
  std::size_t n = 0;
  std::int64_t dof = 0;
  CovarianceKind covariance_kind = CovarianceKind::hc1;
  bool posterior = false;

  Eigen::VectorXd std_errors() const;
};

/**
 * Least squares with a selectable coefficient covariance:
 *   classical  s^2 (X'X)^-1,  s^2 = RSS / (n - p)
 *   hc1        (X'X)^-1 X' diag(e^2) X (X'X)^-1 * n / (n - p)
 *   cluster    (X'X)^-1 [sum_g X_g' e_g e_g' X_g] (X'X)^-1 * G/(G-1) * (n-1)/(n-p)
 *
 * Rank is checked on the singular values of the R factor with relative
 * tolerance 1e-10; a rank-deficient design raises NumericError naming the
 * columns involved in the dependency.
 */
FittedModel fit_ols(const DesignMatrix& design, CovarianceKind kind);
FittedModel fit_ols(const DesignMatrix& design, CovarianceKind kind,
                    std::span<const std::string> cluster_ids);

/// Exact conjugate posterior for beta under N(prior_mean, prior_covariance)
/// and known noise variance. Returns a model with posterior = true.
FittedModel fit_bayes(const DesignMatrix& design, const BayesPrior& prior);

/// Isotropic prior N(mean * 1, variance * I) sized to `p` coefficients.
BayesPrior isotropic_prior(std::size_t p, double mean, double variance, double noise_variance);

/// Reinterprets a sampling distribution as a flat-prior posterior.
FittedModel as_flat_prior_posterior(FittedModel model);

}  // namespace effect_engine
