#pragma once

// Synthetic panels from a known parameter set and the parameter-recovery study.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ebmss/ebm_model.hpp"
#include "ebmss/estimation.hpp"
#include "ebmss/panel.hpp"

namespace ebmss {

/// Reference data-generating parameters: eight GMSTs, two ocean pairs.
EbmParamVector reference_dgp();
MeasurementConfig reference_config();  // K = 8, J = 2

/// Keeps the first GMST and the first ocean pair (J must be >= 1 in `config`).
EbmParamVector restrict_to_base(const EbmParamVector& params, const MeasurementConfig& config);
MeasurementConfig base_config(const MeasurementConfig& config);

struct SimulationSetup {
  std::vector<int> years;
  Eigen::VectorXd natural;           // exogenous natural forcing, aligned with years
  Eigen::VectorXd reference_anthro;  // historical anthropogenic forcing, aligned with years
  /// Known initial (T_m, T_d, A, beta); see make_setup.
  Eigen::Vector4d init_state = Eigen::Vector4d::Zero();

  void validate() const;
};

/// Initial state T_m = 0.3, T_d = 0.1, A = first reference value and beta =
/// the mean annual increment of the reference series.
SimulationSetup make_setup(std::vector<int> years, Eigen::VectorXd natural, Eigen::VectorXd reference_anthro);

struct RejectionRule {
  bool enabled = true;
  double threshold = 0.75;
  int attempt_cap = 10000;
};

/// Mid and end checks against threshold times the reference values.
bool accept_trajectory(double sim_mid, double sim_end, double ref_mid, double ref_end, double threshold);
/// Zero-based indices of the mid (floor(T/2)-th year) and end points.
Index mid_index(Index steps);

struct SimulatedDataset {
  Dataset data;
  Eigen::MatrixXd states;  // 6 x T
  int attempts = 0;
};

/// Draws states and measurements, retaining only trajectories whose simulated
/// anthropogenic forcing (total minus natural) passes the rejection rule.
/// Throws numerical_error when the attempt cap is exceeded.
SimulatedDataset simulate_dgp(const EbmParamVector& params, const MeasurementConfig& config,
                              const SimulationSetup& setup, std::mt19937_64& rng, const RejectionRule& rule = {});
SimulatedDataset simulate_dgp(const EbmParamVector& params, const MeasurementConfig& config,
                              const SimulationSetup& setup, std::uint64_t seed, const RejectionRule& rule = {});

/// Sub-panel with GMST 1, ocean pair 1 and total forcing, values copied bit for bit.
ObservationPanel extract_base_panel(const ObservationPanel& full);

/// Canonical series metadata for a simulated panel.
std::vector<SeriesMeta> simulated_series(const MeasurementConfig& config);

struct ParameterStats {
  std::string name;
  double dgp_value = 0;
  double bias = 0;
  double sd = 0;  // population standard deviation (divisor n)
  double rmse = 0;
  double mae = 0;
  int n = 0;
};

struct ConfigRecovery {
  MeasurementConfig config;
  std::vector<std::string> names;  // parameter names followed by "ecs"
  Eigen::VectorXd dgp;
  Eigen::MatrixXd estimates;       // reps x names, NaN rows for failed fits
  std::vector<bool> ok;
  Eigen::VectorXd lambda_cv;       // per replication, NaN if unavailable
  std::vector<ParameterStats> stats;
  int failures = 0;
};

struct SimulationReport {
  int reps = 0;
  std::uint64_t seed = 0;
  long attempts = 0;
  long retained = 0;
  ConfigRecovery full;
  ConfigRecovery base;
  bool has_base = false;
};

struct MonteCarloOptions {
  int reps = 200;
  std::uint64_t seed = 1;
  int workers = 1;
  bool include_base = true;
  FitOptions fit{};
  RejectionRule rejection{};
};

/// Bias, sd, RMSE and MAE of the rows of `estimates` flagged ok.
std::vector<ParameterStats> summarize(const std::vector<std::string>& names, const Eigen::VectorXd& dgp,
                                      const Eigen::MatrixXd& estimates, const std::vector<bool>& ok);

/// Independent stream for replication `rep`.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep);

SimulationReport monte_carlo(const EbmParamVector& dgp, const MeasurementConfig& config,
                             const SimulationSetup& setup, const MonteCarloOptions& options);

}  // namespace ebmss
