#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nnr {

/// Summary of one numeric column within one group of rows.
struct Aggregate {
  std::vector<double> group;  // values of the grouping columns
  std::string column;
  std::size_t count = 0;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std (n - 1) / sqrt(count); 0 for a single row
  double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;  // echoed verbatim, in order
  std::vector<std::string> columns;
  std::size_t group_columns = 0;  // leading columns that identify a cell
  std::vector<std::vector<double>> rows;  // one per replication, ordered by replication index
  std::vector<Aggregate> aggregates;
  std::vector<std::pair<std::string, double>> scalars;
  double wall_clock_seconds = 0.0;

  double scalar(const std::string& key) const;
  std::size_t column_index(const std::string& col) const;
};

/// Quantile of sorted data, linear interpolation between order statistics (type 7).
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Groups rows by the leading `group_columns` values (first-appearance order)
/// and summarizes every other column.
std::vector<Aggregate> aggregate(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& columns,
                                 std::size_t group_columns);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);
std::uint64_t config_hash(const ExperimentReport& r);

/// Per-replication rows, %.17g, preceded by a comment line carrying the config hash.
std::string to_csv(const ExperimentReport& r);
/// Config echo, scalars, aggregates and wall clock.
std::string to_json(const ExperimentReport& r);

struct WrittenFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Writes <name>_seed<seed>.csv and .json under `dir`.
WrittenFiles write_report(const ExperimentReport& r, const std::filesystem::path& dir);

}  // namespace nnr
