#pragma once

// Shared inputs for tests that need the bundled forcing series.

#include <filesystem>
#include <string>

#include "ebmss/data_pipeline.hpp"
#include "ebmss/simulation.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return EBMSS_DATA_DIR; }

/// 1955-2020 natural and anthropogenic forcing from data/.
inline ebmss::SimulationSetup reference_setup() {
  const auto nat = ebmss::read_series_csv(data_dir() / "forcing_natural.csv", "natural",
                                          ebmss::SeriesKind::forcing_natural);
  const auto ant = ebmss::read_series_csv(data_dir() / "forcing_anthropogenic.csv", "anthropogenic",
                                          ebmss::SeriesKind::forcing_anthropogenic);
  return ebmss::make_setup(nat.years, nat.values, ant.values);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ebmss_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
