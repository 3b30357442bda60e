#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

#include "pivotband/simulation.hpp"

namespace pivotband {

/// Column order of coverage tables; bump kCoverageSchemaVersion on change.
inline constexpr int kCoverageSchemaVersion = 1;
inline const std::vector<std::string> kCoverageColumns = {
    "scenario", "method", "n", "reps", "covered", "degenerate", "coverage", "mc_stderr", "seed"};

inline constexpr std::string_view kInterceptLabel = "(intercept)";

struct LoadResult {
  Dataset data;
  Index dropped = 0;
  Index total_rows = 0;
};

/// Reads a headed, comma-separated file. Rows with a missing value (empty,
/// NA or NaN) in any selected column are dropped; any other non-numeric cell
/// is a parse error naming its row and column. With add_intercept a column
/// of ones labelled "(intercept)" is prepended to the design.
LoadResult load_csv(const std::string& path, std::string_view response, const std::vector<std::string>& covariates,
                    bool add_intercept);

/// Writes y (as `response`) and every design column under its label, using
/// shortest round-trip number formatting.
void write_dataset_csv(const Dataset& data, const std::string& path, std::string_view response = "y");

/// "start:stop:step" (inclusive stop) or a comma-separated list.
std::vector<Index> parse_grid(std::string_view spec);
std::vector<std::string> split_list(std::string_view list);

std::string format_number(double value);

std::string coverage_csv(const std::vector<CoverageRecord>& records);
std::vector<CoverageRecord> parse_coverage_csv(std::string_view text);
void write_coverage_csv(const std::vector<CoverageRecord>& records, const std::string& path);
std::vector<CoverageRecord> read_coverage_csv(const std::string& path);

/// Writes to a temporary sibling, then renames over the target.
void atomic_write(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  nlohmann::json assumptions;
  std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
std::string manifest_path(const std::string& output);
void write_manifest(const RunManifest& manifest, const std::string& output);

std::string utc_timestamp();
std::string library_version();

/// Assumption flags recorded with every simulated result.
nlohmann::json scenario_assumptions(const Scenario& scenario);

}  // namespace pivotband
