#include "effect_engine/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "effect_engine/error.hpp"

namespace effect_engine::io {
namespace {

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == "null" || cell == "NULL";
}

std::optional<double> parse_real(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::string where(std::size_t row, std::string_view column) {
  return "row " + std::to_string(row + 1) + ", column '" + std::string(column) + "'";
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty())
          throw ValidationError("stray quote inside an unquoted field on line " +
                                std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field at end of input");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

Dataset dataset_from_csv(std::string_view text, const ColumnMap& columns) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto records = parse_csv(text);
  if (records.empty()) throw ValidationError("CSV input is empty");
  const auto& header = records.front();
  const std::size_t rows = records.size() - 1;
  if (rows == 0) throw ValidationError("CSV input has a header but no data rows");
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size())
      throw ValidationError("row " + std::to_string(r) + " has " +
                            std::to_string(records[r].size()) + " fields, header has " +
                            std::to_string(header.size()));
  }

  auto index_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  auto cell = [&](std::size_t row, std::size_t col) -> const std::string& {
    return records[row + 1][col];
  };

  const std::size_t outcome_col = index_of(columns.outcome);
  const std::size_t arm_col = index_of(columns.arm);
  std::optional<std::size_t> unit_col, period_col;
  if (columns.unit_id) unit_col = index_of(*columns.unit_id);
  if (columns.period) period_col = index_of(*columns.period);

  std::vector<std::string> covariate_names;
  if (columns.covariates) {
    covariate_names = *columns.covariates;
    for (const auto& name : covariate_names) (void)index_of(name);
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == outcome_col || c == arm_col || c == unit_col || c == period_col) continue;
      covariate_names.push_back(header[c]);
    }
  }

  std::vector<double> outcome(rows);
  std::vector<std::string> arms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto v = parse_real(cell(r, outcome_col));
    if (!v)
      throw ValidationError("unparseable numeric cell '" + cell(r, outcome_col) + "' at " +
                            where(r, columns.outcome));
    outcome[r] = *v;
    arms[r] = cell(r, arm_col);
    if (arms[r].empty()) throw ValidationError("empty arm label at " + where(r, columns.arm));
  }

  std::vector<CovariateColumn> covariates;
  for (const auto& name : covariate_names) {
    const std::size_t c = index_of(name);
    bool numeric = true;
    std::vector<double> values(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      if (is_missing(cell(r, c)))
        throw ValidationError("missing value '" + cell(r, c) + "' at " + where(r, name));
      auto v = parse_real(cell(r, c));
      if (!v) {
        numeric = false;
        break;
      }
      values[r] = *v;
    }
    if (numeric) {
      covariates.push_back({name, std::move(values)});
    } else {
      std::vector<std::string> labels(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        if (is_missing(cell(r, c)))
          throw ValidationError("missing value '" + cell(r, c) + "' at " + where(r, name));
        labels[r] = cell(r, c);
      }
      covariates.push_back({name, std::move(labels)});
    }
  }

  std::optional<std::vector<std::string>> units;
  if (unit_col) {
    units.emplace(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      (*units)[r] = cell(r, *unit_col);
      if ((*units)[r].empty()) throw ValidationError("empty unit id at " + where(r, *columns.unit_id));
    }
  }
  std::optional<std::vector<std::int64_t>> periods;
  if (period_col) {
    periods.emplace(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& s = cell(r, *period_col);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ValidationError("unparseable integer period '" + s + "' at " +
                              where(r, *columns.period));
      (*periods)[r] = v;
    }
  }

  return Dataset(std::move(outcome), std::move(arms), std::move(covariates), std::move(units),
                 std::move(periods), columns.period.value_or("period"));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_csv(buf.str(), columns);
}

}  // namespace effect_engine::io
