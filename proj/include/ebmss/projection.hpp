#pragma once

// Scenario projections of the mixed-layer temperature under parameter uncertainty.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ebmss/ebm_model.hpp"
#include "ebmss/estimation.hpp"
#include "ebmss/panel.hpp"

namespace ebmss {

struct ScenarioPath {
  std::string name;
  std::vector<int> years;  // contiguous
  Eigen::VectorXd forcing;  // total forcing, W m^-2

  void validate() const;
};

/// Reads `year,forcing` text; every year must carry a value.
ScenarioPath read_scenario_csv(const std::filesystem::path& path, const std::string& name);

/// Iterates the noise-free temperature block from `init` = (T_m, T_d):
/// x_h = T x_{h-1} + forcing(h-1) / c_m e_1, h = 1..H. Returns T_m at h = 1..H.
Eigen::VectorXd deterministic_forward(const PhysicalParams& physical, const Eigen::Vector2d& init,
                                      const Eigen::VectorXd& forcing);

/// Type-7 (linear interpolation) sample quantile of unsorted data.
double quantile(std::vector<double> values, double p);

/// True when every transition coefficient of the temperature block is
/// non-negative, which makes projections monotone in the forcing path.
bool monotone_transition(const PhysicalParams& physical);

struct ProjectionOptions {
  int draws = 10000;
  std::uint64_t seed = 1;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  int workers = 1;
  bool keep_paths = false;
  /// Draw attempts allowed per retained draw before giving up.
  int attempts_per_draw = 100;
};

struct ProjectionFan {
  std::string scenario;
  std::vector<int> years;        // scenario years (horizons 1..H)
  std::vector<double> levels;    // quantile levels
  Eigen::MatrixXd quantiles;     // H x levels
  Eigen::MatrixXd paths;         // draws x H when keep_paths
};

struct ProjectionResult {
  std::vector<ProjectionFan> fans;  // one per scenario, same draws throughout
  int draws = 0;
  long rejected = 0;  // invalid parameter draws that were resampled
  std::uint64_t seed = 0;
  bool high_rejection = false;  // more than half of all attempts rejected
  std::string status = "ok";
};

/// Draws (lambda, gamma, c_m, c_d) from N(theta_hat, vcov_physical) with the
/// other parameters fixed, resampling draws that violate the physical
/// invariants or monotone_transition. Each draw re-runs the Kalman filter on
/// `data` and projects from the filtered end-of-sample (T_m, T_d). The first
/// step uses the filtered forcing N_T + A_T, later steps the scenario.
ProjectionResult project(const FitResult& fit, const Dataset& data, const std::vector<ScenarioPath>& scenarios,
                         const ProjectionOptions& options = {});

/// End-of-sample filtered (T_m, T_d) and forcing N + A under `params`.
struct EndState {
  Eigen::Vector2d temps;
  double forcing;
};
EndState filtered_end_state(const EbmParamVector& params, const MeasurementConfig& config, const Dataset& data);

}  // namespace ebmss
