#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "effect_engine/dataset.hpp"
#include "effect_engine/io/config.hpp"

namespace effect_engine::io {

inline constexpr const char* kReportVersion = "1.0";

struct RunOptions {
  std::filesystem::path data_path;
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_path;
  std::optional<std::uint64_t> seed;
  bool flat_prior_ok = false;
  bool partial = false;
  unsigned workers = 0;  // 0 = default_workers()
};

struct RunOutcome {
  /// 0 success, 1 validation error, 2 numeric failure.
  int exit_code = 0;
  std::filesystem::path report_path;
  std::string message;
};

/// Fits the models the queries need, answers every query and returns the
/// report as a JSON document string. Throws effect_engine::Error on failure
/// unless `partial`, in which case query errors are recorded in the report.
std::string build_report(const Dataset& data, const QueryConfig& config,
                         const std::string& data_bytes, const std::string& config_bytes,
                         const RunOptions& options);

/// Human-readable rendering of a JSON report.
std::string render_text(const std::string& report_json);

/// End to end: load, compute, write the report atomically. Never throws.
RunOutcome run(const RunOptions& options);

/// Writes `contents` to a temporary sibling file and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace effect_engine::io
