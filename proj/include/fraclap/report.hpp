#pragma once

// Report plumbing: numeric CSV tables (17 significant digits, '.' decimal),
// JSON metadata headers, atomic file writes, field import/export and golden
// comparison against a per-column tolerance manifest.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fraclap/manifold.hpp"

namespace fraclap {

inline constexpr const char* kReportSchema = "fraclap-report/1";

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  std::size_t column(std::string_view name) const;  // throws IncompatibilityError
};

/// Shortest round-trip text is not used; always 17 significant digits.
std::string format_number(double v);
std::string to_csv(const Table& t);
/// Throws IncompatibilityError on ragged rows or non-numeric cells.
Table parse_csv(std::string_view text);

/// 16 hex digits of FNV-1a 64.
std::string digest(std::string_view text);

struct Metadata {
  std::string experiment;
  std::string version;
  std::string config_digest;
  std::string manifold_digest;
  std::string quadrature_digest;
  std::vector<double> s;
};

nlohmann::json to_json(const Metadata& m);

/// Writes to a sibling temporary and renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Columns node, x, y, z, value.
Table field_table(const Field& u);
/// Reads the value column; throws IncompatibilityError on a node-count mismatch.
Field field_from_table(const SpectralManifold& m, const Table& t);

struct GoldenBreach {
  std::string file;
  std::string column;
  std::size_t row = 0;
  double value = 0.0;
  double golden = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
};

struct GoldenDiff {
  /// file -> column -> max relative deviation
  std::map<std::string, std::map<std::string, double>> max_deviation;
  std::vector<GoldenBreach> breaches;
  bool ok() const { return breaches.empty(); }
};

/// |a - b| / max(|a|, |b|), 0 when equal.
double relative_deviation(double a, double b);

/// Per-column comparison. Throws IncompatibilityError when the columns or row
/// counts differ or a column has no tolerance entry.
void compare_table(const std::string& file, const Table& report, const Table& golden,
                   const std::map<std::string, double>& tolerances, GoldenDiff& diff);

/// Compares every CSV listed in golden_dir/tolerances.json with the same file
/// in report_dir. The manifest is {"schema": ..., "files": {name: {column: tol}}}.
GoldenDiff compare_golden(const std::filesystem::path& report_dir,
                          const std::filesystem::path& golden_dir);

}  // namespace fraclap
