#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "effect_engine/dataset.hpp"
#include "effect_engine/io/csv.hpp"
#include "effect_engine/model.hpp"

namespace effect_engine::io {

/// Prior block of the config. Scalars expand to `mean * 1` and `variance * I`
/// once the design width is known.
struct BayesConfig {
  std::vector<double> prior_mean;                  // size 1 means "broadcast"
  std::vector<std::vector<double>> prior_covariance;  // 1x1 means "variance * I"
  double noise_variance = 1.0;

  BayesPrior resolve(std::size_t p) const;
};

struct ModelConfig {
  std::string reference_arm;
  CovarianceKind covariance_kind = CovarianceKind::hc1;
  std::map<std::string, Encoding, std::less<>> encodings;
  bool interactions = true;
  std::optional<BayesConfig> bayes;
};

enum class QueryType { ate, cate, hte, dte, relative, rank, prob_positive };

std::string_view to_string(QueryType type);

struct QuerySpec {
  QueryType type = QueryType::ate;
  std::optional<std::string> id;
  /// [arm_to, arm_from] for effect queries; candidate arms for rank (empty
  /// means every arm).
  std::vector<std::string> arms;
  std::string predicate;
  std::vector<std::int64_t> periods;
  double ci_level = 0.95;
  std::optional<CovarianceKind> covariance;
  double ratio_guard = 5.0;
};

struct OutputConfig {
  std::string path = "report.json";
  std::string format = "json";  // json | text
};

struct QueryConfig {
  ColumnMap columns;
  ModelConfig model;
  std::vector<QuerySpec> queries;
  OutputConfig output;
  std::uint64_t seed = 0;
  double mvn_tol = 5e-4;
  bool partial = false;
};

/// Parses and validates a JSON config. Throws ValidationError naming the
/// offending field.
QueryConfig parse_config(std::string_view json_text);
QueryConfig load_config(const std::filesystem::path& path);

/// Checks the config against loaded data: arms, reference arm, period and
/// unit mappings.
void check_config_against(const QueryConfig& config, const Dataset& data);

}  // namespace effect_engine::io
