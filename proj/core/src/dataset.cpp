#include "effect_engine/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "effect_engine/error.hpp"

namespace effect_engine {

std::size_t CovariateColumn::size() const {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

Dataset::Dataset(std::vector<double> outcome, std::vector<std::string> arms,
                 std::vector<CovariateColumn> covariates,
                 std::optional<std::vector<std::string>> unit_ids,
                 std::optional<std::vector<std::int64_t>> periods, std::string period_name)
    : outcome_(std::move(outcome)),
      arms_(std::move(arms)),
      covariates_(std::move(covariates)),
      unit_ids_(std::move(unit_ids)),
      periods_(std::move(periods)),
      period_name_(std::move(period_name)) {
  const std::size_t n = outcome_.size();
  if (n == 0) throw ValidationError("dataset has no rows");
  if (arms_.size() != n) throw ValidationError("arm column length differs from outcome length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(outcome_[i]))
      throw ValidationError("non-finite outcome at row " + std::to_string(i));
  }

  std::set<std::string, std::less<>> names;
  for (const auto& col : covariates_) {
    if (col.name.empty()) throw ValidationError("covariate with empty name");
    if (!names.insert(col.name).second)
      throw ValidationError("duplicate covariate '" + col.name + "'");
    if (col.size() != n)
      throw ValidationError("covariate '" + col.name + "' length differs from outcome length");
    if (col.is_numeric()) {
      const auto& v = col.numeric();
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i]))
          throw ValidationError("non-finite value in covariate '" + col.name + "' at row " +
                                std::to_string(i));
      }
    }
  }
  if (unit_ids_ && unit_ids_->size() != n)
    throw ValidationError("unit id column length differs from outcome length");
  if (periods_ && periods_->size() != n)
    throw ValidationError("period column length differs from outcome length");

  arm_labels_ = arms_;
  std::sort(arm_labels_.begin(), arm_labels_.end());
  arm_labels_.erase(std::unique(arm_labels_.begin(), arm_labels_.end()), arm_labels_.end());
  if (arm_labels_.size() < 2)
    throw ValidationError("dataset needs at least 2 distinct arms, found " +
                          std::to_string(arm_labels_.size()));
}

const CovariateColumn* Dataset::find_covariate(std::string_view name) const {
  for (const auto& col : covariates_) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

std::span<const std::string> Dataset::unit_ids() const {
  if (!unit_ids_) return {};
  return *unit_ids_;
}

std::span<const std::int64_t> Dataset::periods() const {
  if (!periods_) return {};
  return *periods_;
}

bool Dataset::has_arm(std::string_view arm) const {
  return std::binary_search(arm_labels_.begin(), arm_labels_.end(), arm);
}

std::vector<std::int64_t> Dataset::distinct_periods() const {
  if (!periods_) return {};
  std::vector<std::int64_t> out = *periods_;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

template <typename T>
std::vector<T> reorder(const std::vector<T>& v, std::span<const std::size_t> order) {
  std::vector<T> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(v.at(i));
  return out;
}

}  // namespace

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) throw ValidationError("permutation length differs from row count");
  std::vector<CovariateColumn> cols;
  cols.reserve(covariates_.size());
  for (const auto& col : covariates_) {
    CovariateColumn c{col.name, {}};
    if (col.is_numeric())
      c.values = reorder(col.numeric(), order);
    else
      c.values = reorder(col.labels(), order);
    cols.push_back(std::move(c));
  }
  std::optional<std::vector<std::string>> units;
  if (unit_ids_) units = reorder(*unit_ids_, order);
  std::optional<std::vector<std::int64_t>> periods;
  if (periods_) periods = reorder(*periods_, order);
  return Dataset(reorder(outcome_, order), reorder(arms_, order), std::move(cols),
                 std::move(units), std::move(periods), period_name_);
}

}  // namespace effect_engine
