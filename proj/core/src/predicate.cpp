#include "effect_engine/predicate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>

#include "effect_engine/error.hpp"

namespace effect_engine {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

const char* op_text(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "?";
}

template <typename T>
bool compare(const T& lhs, CompareOp op, const T& rhs) {
  switch (op) {
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
  }
  return false;
}

bool is_operator_char(char c) { return c == '=' || c == '!' || c == '<' || c == '>'; }

Condition parse_condition(std::string_view clause) {
  clause = trim(clause);
  auto malformed = [&](const char* why) {
    return ValidationError("malformed predicate clause '" + std::string(clause) + "': " + why);
  };
  const auto pos = std::find_if(clause.begin(), clause.end(), is_operator_char) - clause.begin();
  if (static_cast<std::size_t>(pos) == clause.size())
    throw ValidationError("predicate clause has no comparison operator: '" + std::string(clause) + "'");
  auto column = trim(clause.substr(0, pos));
  auto rest = clause.substr(pos);
  // Two-character operators first so "<=" is not read as "<".
  static constexpr std::pair<std::string_view, CompareOp> kOps[] = {
      {"==", CompareOp::eq}, {"!=", CompareOp::ne}, {"<=", CompareOp::le},
      {">=", CompareOp::ge}, {"<", CompareOp::lt},  {">", CompareOp::gt},
  };
  std::optional<CompareOp> op;
  for (const auto& [text, candidate] : kOps) {
    if (rest.substr(0, text.size()) == text) {
      op = candidate;
      rest.remove_prefix(text.size());
      break;
    }
  }
  if (!op) throw malformed("unknown operator");
  auto rhs = trim(rest);
  if (column.empty() || rhs.empty()) throw malformed("missing operand");
  if (column.find_first_of("|()\"'") != std::string_view::npos)
    throw malformed("only conjunctions (&&) of simple comparisons are supported");

  Condition c;
  c.column = std::string(column);
  c.op = *op;
  if (rhs.front() == '"' || rhs.front() == '\'') {
    if (rhs.size() < 2 || rhs.back() != rhs.front() ||
        rhs.substr(1, rhs.size() - 2).find(rhs.front()) != std::string_view::npos)
      throw malformed("unterminated string literal");
    c.literal = std::string(rhs.substr(1, rhs.size() - 2));
  } else if (auto num = parse_number(rhs)) {
    c.literal = *num;
  } else {
    if (rhs.find_first_of(" \t|()=!<>&") != std::string_view::npos)
      throw malformed("only conjunctions (&&) of simple comparisons are supported");
    c.literal = std::string(rhs);
  }
  return c;
}

}  // namespace

Predicate Predicate::parse(std::string_view text) {
  text = trim(text);
  std::vector<Condition> conditions;
  if (text.empty() || text == "true") return Predicate{};
  // Split on && outside quotes.
  std::size_t start = 0;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '&' && i + 1 < text.size() && text[i + 1] == '&') {
      conditions.push_back(parse_condition(text.substr(start, i - start)));
      start = i + 2;
      ++i;
    }
  }
  conditions.push_back(parse_condition(text.substr(start)));
  return Predicate(std::move(conditions));
}

std::vector<bool> Predicate::evaluate(const Dataset& data) const {
  const std::size_t n = data.size();
  std::vector<bool> mask(n, true);
  for (const auto& cond : conditions_) {
    const bool numeric_literal = std::holds_alternative<double>(cond.literal);
    if (const auto* col = data.find_covariate(cond.column)) {
      if (col->is_numeric()) {
        if (!numeric_literal)
          throw ValidationError("numeric column '" + cond.column +
                                "' compared with a string literal");
        const double lit = std::get<double>(cond.literal);
        const auto& v = col->numeric();
        for (std::size_t i = 0; i < n; ++i) mask[i] = mask[i] && compare(v[i], cond.op, lit);
      } else {
        if (numeric_literal)
          throw ValidationError("categorical column '" + cond.column +
                                "' compared with a numeric literal; quote the level");
        const auto& lit = std::get<std::string>(cond.literal);
        const auto& v = col->labels();
        for (std::size_t i = 0; i < n; ++i) mask[i] = mask[i] && compare(v[i], cond.op, lit);
      }
    } else if (data.has_periods() && cond.column == data.period_name()) {
      if (!numeric_literal)
        throw ValidationError("period compared with a non-numeric literal");
      const double lit = std::get<double>(cond.literal);
      auto periods = data.periods();
      for (std::size_t i = 0; i < n; ++i)
        mask[i] = mask[i] && compare(static_cast<double>(periods[i]), cond.op, lit);
    } else {
      throw ValidationError("predicate refers to unknown column '" + cond.column + "'");
    }
  }
  return mask;
}

std::string Predicate::to_string() const {
  if (conditions_.empty()) return "true";
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < conditions_.size(); ++i) {
    const auto& c = conditions_[i];
    if (i > 0) out << " && ";
    out << c.column << ' ' << op_text(c.op) << ' ';
    if (const auto* d = std::get_if<double>(&c.literal))
      out << *d;
    else
      out << '"' << std::get<std::string>(c.literal) << '"';
  }
  return out.str();
}

std::vector<std::size_t> select_rows(const Dataset& data, const Predicate& predicate,
                                     bool complement) {
  auto mask = predicate.evaluate(data);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != complement) rows.push_back(i);
  }
  return rows;
}

}  // namespace effect_engine
