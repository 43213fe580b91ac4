#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace effect_engine {

/// One covariate column. Numeric columns hold reals, categorical columns hold
/// level labels.
struct CovariateColumn {
  std::string name;
  std::variant<std::vector<double>, std::vector<std::string>> values;

  bool is_numeric() const { return values.index() == 0; }
  const std::vector<double>& numeric() const { return std::get<0>(values); }
  const std::vector<std::string>& labels() const { return std::get<1>(values); }
  std::size_t size() const;
};

/**
 * Tabular experiment data stored column-wise: an outcome, a treatment arm
 * label, covariates, and an optional unit id and time period per row.
 *
 * The constructor enforces the invariants every downstream computation relies
 * on: equal column lengths, finite outcomes and numeric covariates, and at
 * least two distinct arms.
 */
class Dataset {
 public:
  Dataset(std::vector<double> outcome, std::vector<std::string> arms,
          std::vector<CovariateColumn> covariates = {},
          std::optional<std::vector<std::string>> unit_ids = std::nullopt,
          std::optional<std::vector<std::int64_t>> periods = std::nullopt,
          std::string period_name = "period");

  std::size_t size() const { return outcome_.size(); }

  std::span<const double> outcome() const { return outcome_; }
  std::span<const std::string> arms() const { return arms_; }
  const std::vector<CovariateColumn>& covariates() const { return covariates_; }
  const CovariateColumn* find_covariate(std::string_view name) const;

  bool has_unit_ids() const { return unit_ids_.has_value(); }
  std::span<const std::string> unit_ids() const;

  bool has_periods() const { return periods_.has_value(); }
  std::span<const std::int64_t> periods() const;
  /// Column name under which predicates may refer to the period.
  const std::string& period_name() const { return period_name_; }

  /// Distinct arm labels, sorted.
  const std::vector<std::string>& arm_labels() const { return arm_labels_; }
  bool has_arm(std::string_view arm) const;

  /// Distinct periods, ascending. Empty when the dataset has no periods.
  std::vector<std::int64_t> distinct_periods() const;

  /// Dataset with rows reordered so that new row i is old row order[i].
  Dataset permuted(std::span<const std::size_t> order) const;

 private:
  std::vector<double> outcome_;
  std::vector<std::string> arms_;
  std::vector<CovariateColumn> covariates_;
  std::optional<std::vector<std::string>> unit_ids_;
  std::optional<std::vector<std::int64_t>> periods_;
  std::string period_name_;
  std::vector<std::string> arm_labels_;
};

}  // namespace effect_engine
