#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "effect_engine/dataset.hpp"

namespace effect_engine::io {

/// Which CSV columns play which role. Covariates default to every column not
/// otherwise mapped.
struct ColumnMap {
  std::string outcome;
  std::string arm;
  std::optional<std::vector<std::string>> covariates;
  std::optional<std::string> unit_id;
  std::optional<std::string> period;
};

/// RFC 4180 records: comma delimiter, double-quoted fields with "" escapes,
/// CRLF or LF line endings. A trailing newline does not add a record.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Parses a header plus rows into a Dataset. A covariate column is numeric
/// when every cell parses as a finite number and categorical otherwise;
/// empty or NA-like cells are rejected with their row and column.
Dataset dataset_from_csv(std::string_view text, const ColumnMap& columns);

Dataset load_csv(const std::filesystem::path& path, const ColumnMap& columns);

}  // namespace effect_engine::io
