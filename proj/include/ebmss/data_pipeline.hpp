#pragma once

// Loading, baseline synchronization and assembly of the observation panel.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ebmss/panel.hpp"

namespace ebmss {

struct AnomalySeries {
  std::string label;
  SeriesKind kind = SeriesKind::gmst;
  std::vector<int> years;  // strictly increasing
  Eigen::VectorXd values;  // NaN marks a missing value
  std::string baseline = "unspecified";
  std::optional<std::string> pair_id;
  std::optional<std::string> depth;  // e.g. "0-700m" for ocean kinds

  void validate() const;
  /// Value for `year`, NaN when absent or missing.
  double at(int year) const;
};

/// Pre-industrial mean of a series under its own baseline.
double compute_offset(double mean_1986_2005, double delta_preind);

/// Shifts values by -offset and relabels the baseline.
AnomalySeries synchronize(const AnomalySeries& series, double offset, std::string new_baseline = "pre-industrial");

/// total - natural on the overlapping years. Throws input_error on empty overlap.
AnomalySeries split_forcing(const AnomalySeries& total, const AnomalySeries& natural);

enum class SyncMode { table, offset, synchronized };
std::string_view to_string(SyncMode mode);

struct SyncSpec {
  SyncMode mode = SyncMode::synchronized;
  double mean_1986_2005 = 0;  // table mode
  double delta_preind = 0;    // table mode
  double offset = 0;          // offset mode

  /// Offset subtracted from the series; 0 for already-synchronized series.
  double resolved_offset() const;
};

struct ManifestEntry {
  std::filesystem::path path;  // relative paths resolve against the manifest directory
  std::string label;
  SeriesKind kind = SeriesKind::gmst;
  std::optional<std::string> pair_id;
  std::optional<std::string> depth;
  std::string baseline = "unspecified";
  SyncSpec sync;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;
  std::optional<std::pair<int, int>> sample_years;
};

/// Parses a manifest document (JSON). Throws input_error naming the offending entry.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const Manifest& manifest);

/// Delimited text with a header row `year,<name>`; an empty field is missing.
AnomalySeries read_series_csv(const std::filesystem::path& path, const std::string& label, SeriesKind kind);
/// Serializes `year,value` with full round-trip precision.
std::string series_to_csv(const AnomalySeries& series, const std::string& value_name = "value");

struct SyncRecord {
  std::string label;
  SeriesKind kind;
  SyncMode mode;
  double offset;
};

struct AssembledData {
  Dataset dataset;                      // canonical rows, natural forcing aligned
  std::vector<AnomalySeries> synchronized;  // every manifest series after synchronization
  std::vector<SyncRecord> sync_report;
  Eigen::VectorXd anthropogenic;        // explicit series if supplied, else total - natural
};

/// Loads every series, synchronizes it, and builds the panel on `years`
/// (first..last inclusive). Rows: GMSTs by label, ocean temperatures by pair,
/// OHCs by pair, total forcing. Natural forcing must cover every sample year.
AssembledData assemble_panel(const Manifest& manifest, std::pair<int, int> years);
/// Uses the manifest's sample_years, or the span of the total-forcing series.
AssembledData assemble_panel(const Manifest& manifest);

}  // namespace ebmss
