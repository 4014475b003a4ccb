#pragma once

// Text serialization of run outputs and all-or-nothing file writing.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ebmss/data_pipeline.hpp"
#include "ebmss/estimation.hpp"
#include "ebmss/projection.hpp"
#include "ebmss/simulation.hpp"
#include "ebmss/stats_tests.hpp"

namespace ebmss {

inline constexpr const char* kFitReportSchema = "ebmss.fit_report/1";

/// Shortest round-trip decimal form; "NA" for NaN or infinities.
std::string format_number(double x);

/// Files staged in memory and published together. commit() writes each file
/// to a temporary sibling and renames it into place; nothing is written
/// before commit(), and on failure the temporaries are removed.
class OutputBatch {
 public:
  explicit OutputBatch(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void add(const std::filesystem::path& relative, std::string content);
  void commit() const;
  const std::vector<std::pair<std::filesystem::path, std::string>>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

/// Single-file convenience over OutputBatch.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

struct FitContext {
  std::vector<std::string> series;  // panel row labels
  int first_year = 0;
  int last_year = 0;
};

/// JSON document with estimates, standard errors, CVs, ECS, covariance of the
/// physical parameters and convergence metadata.
std::string fit_report_json(const FitResult& fit, const FitContext& context);

struct LoadedFit {
  FitResult fit;
  FitContext context;
};
/// Restores the parts of a fit needed for projection. Throws input_error.
LoadedFit parse_fit_report(const std::string& text);

/// Rows mean, std, skewness, kurtosis, jb, q1, n; one column per series.
std::string diagnostics_csv(const std::vector<std::string>& labels, const std::vector<ResidualSummary>& rows);

/// One row per parameter: dgp value then bias, sd, rmse, mae for the full
/// configuration and, when present, the base configuration.
std::string simulation_table_csv(const SimulationReport& report);
/// Per-replication estimates, one column per parameter; failed fits are NA rows.
std::string replications_csv(const ConfigRecovery& recovery);
std::string simulation_report_json(const SimulationReport& report);

/// Column name for a quantile level: 0.05 -> q05, 0.5 -> q50, 0.025 -> q2.5.
std::string quantile_column(double level);
/// `year,q05,q50,q95` (columns follow the fan's levels).
std::string fan_csv(const ProjectionFan& fan);
std::string projection_report_json(const ProjectionResult& result, const std::vector<std::string>& scenario_files);

struct AdfRow {
  std::string series;
  std::string transform;  // "level" or "diff"
  int first_year = 0;
  int last_year = 0;
  AdfResult result;
};
/// Significance marker: "**" at 1%, "*" at 5%, empty otherwise.
std::string adf_stars(const AdfResult& result);
std::string adf_table_csv(const std::vector<AdfRow>& rows);

std::string sync_report_csv(const std::vector<SyncRecord>& records);

}  // namespace ebmss
