#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "effect_engine/dataset.hpp"

namespace effect_engine {

enum class CompareOp { eq, ne, lt, le, gt, ge };

/// `column OP literal`. String literals compare against categorical columns,
/// numeric literals against numeric columns and the period.
struct Condition {
  std::string column;
  CompareOp op = CompareOp::eq;
  std::variant<double, std::string> literal;
};

/**
 * A conjunction of conditions over dataset columns. The empty conjunction is
 * true everywhere and selects the whole dataset.
 *
 * Text form: `x >= 3 && grade == "4"`. Bare words on the right-hand side are
 * string literals; anything that parses as a number is numeric.
 */
class Predicate {
 public:
  Predicate() = default;
  explicit Predicate(std::vector<Condition> conditions)
      : conditions_(std::move(conditions)) {}

  static Predicate parse(std::string_view text);
  static Predicate always() { return {}; }

  bool is_always() const { return conditions_.empty(); }
  const std::vector<Condition>& conditions() const { return conditions_; }

  /// Throws ValidationError on unknown columns or literal/column type mismatch.
  std::vector<bool> evaluate(const Dataset& data) const;

  std::string to_string() const;

 private:
  std::vector<Condition> conditions_;
};

/// Row indices selected by `predicate`, or by its negation when `complement`.
std::vector<std::size_t> select_rows(const Dataset& data, const Predicate& predicate,
                                     bool complement = false);

}  // namespace effect_engine
