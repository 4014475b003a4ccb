#pragma once

// Two-component energy balance model in state-space form.
//
// State (m = 6):   X_t = (T_m, T_d, N, A, beta, 1)
// Observations:    K GMST rows, J ocean-temperature rows, J OHC rows, 1 total
//                  forcing row, in that order.
//
// The temperature block is the explicit-Euler (unit-step) discretization of
//   C_m dT_m/dt = F - lambda T_m - gamma (T_m - T_d)
//   C_d dT_d/dt = gamma (T_m - T_d)
// with F = N + A; A follows a local linear trend and N is exogenous, carried
// through the constant state by the time-varying entry T_t(N, 1) = Y_{N,t+1}.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ebmss/ssm.hpp"

namespace ebmss {

namespace state {
inline constexpr Index tm = 0;
inline constexpr Index td = 1;
inline constexpr Index natural = 2;
inline constexpr Index anthro = 3;
inline constexpr Index slope = 4;
inline constexpr Index one = 5;
inline constexpr Index dim = 6;
}  // namespace state

inline constexpr double kVarianceFloor = 1e-12;
/// |rho| is mapped through rho = kRhoBound * tanh(u).
inline constexpr double kRhoBound = 0.9999;
inline constexpr double kDefaultF2x = 3.93;
/// 5-95% half-width 0.47 converted to a Gaussian standard error.
inline constexpr double kDefaultF2xSe = 0.47 / 1.645;

struct PhysicalParams {
  double lambda = 1.0;  // climate feedback, W m^-2 K^-1
  double gamma = 1.0;   // heat transfer, W m^-2 K^-1
  double c_m = 10.0;    // mixed-layer heat capacity, W yr m^-2 K^-1
  double c_d = 100.0;   // deep-ocean heat capacity, W yr m^-2 K^-1

  /// Positivity, c_m < c_d, and discrete stability of the temperature block.
  bool valid() const;
  void validate() const;  // throws input_error with the violated condition
  Eigen::Vector4d as_vector() const { return {lambda, gamma, c_m, c_d}; }
  static PhysicalParams from_vector(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

struct NoiseParams {
  double var_eta_tm = 0;
  double var_eta_td = 0;
  double var_eta_a = 0;
  double var_eta_beta = 0;
  std::vector<double> var_eps_gmst;  // K
  std::vector<double> var_eps_td;    // J
  std::vector<double> var_eps_ohc;   // J
  double var_eps_f = 0;
  std::vector<double> rho;    // J, correlation of the ocean-temperature and OHC errors
  std::vector<double> mu_td;  // J, ocean baseline offsets (deg C)
};

struct MeasurementConfig {
  int n_gmst = 1;
  int n_ocean_pairs = 0;
  double f2x = kDefaultF2x;
  double f2x_se = kDefaultF2xSe;

  void validate() const;
  Index obs_dim() const { return n_gmst + 2 * n_ocean_pairs + 1; }
  /// Length of the parameter vector for this configuration.
  Index n_params() const { return 9 + n_gmst + 4 * n_ocean_pairs; }
};

struct EbmParamVector {
  PhysicalParams physical;
  NoiseParams noise;

  /// Checks sizes against `config`, variance floor, |rho| < 1, physical invariants.
  void validate(const MeasurementConfig& config) const;

  /// Original-scale values in canonical order (see parameter_names).
  Eigen::VectorXd values() const;
  static EbmParamVector from_values(const Eigen::VectorXd& v, const MeasurementConfig& config);
};

/// lambda, gamma, c_m, c_d, var_eta_{tm,td,a,beta}, var_eps_gmst_k, var_eps_td_j,
/// var_eps_ohc_j, var_eps_f, rho_j, mu_td_j.
std::vector<std::string> parameter_names(const MeasurementConfig& config);

enum class ParamTransform { log, scaled_atanh, identity };
std::vector<ParamTransform> parameter_transforms(const MeasurementConfig& config);

struct Unconstrained {
  Eigen::VectorXd u;
  /// Parameters sitting at a constraint boundary (variance at the floor).
  std::vector<std::string> at_boundary;
};

/// Log for positive parameters, scaled inverse tanh for rho, identity for mu_td.
Unconstrained transform(const EbmParamVector& theta, const MeasurementConfig& config);
/// Inverse of transform. Variances that fall below the floor are clamped to it.
EbmParamVector untransform(const Eigen::VectorXd& u, const MeasurementConfig& config);
/// Diagonal of d theta / d u at u (zero for variances clamped at the floor).
Eigen::VectorXd untransform_jacobian(const Eigen::VectorXd& u, const MeasurementConfig& config);

enum class InitKind { big_k, known };

/// Initial state distribution. Big K: a1 = 0 for the latent states with
/// variance `big_k` (N and the constant state are known exactly). Known: the
/// latent states start at `known_mean` = (T_m, T_d, A, beta) with zero variance.
struct StateInit {
  InitKind kind = InitKind::big_k;
  double big_k = 1e6;
  Eigen::Vector4d known_mean = Eigen::Vector4d::Zero();
};

/// Builds T, Z, Q, H, a1, P1. `natural_forcing` is the natural-forcing series
/// aligned with the sample; its first `steps` values must be finite.
SystemMatrices<double> build_system(const EbmParamVector& params, const MeasurementConfig& config,
                                    const Eigen::VectorXd& natural_forcing, Index steps,
                                    const StateInit& init = {});
inline SystemMatrices<double> build_system(const EbmParamVector& params, const MeasurementConfig& config,
                                           const Eigen::VectorXd& natural_forcing, const StateInit& init = {}) {
  return build_system(params, config, natural_forcing, natural_forcing.size(), init);
}

/// Equilibrium climate sensitivity f2x / lambda.
double ecs(double lambda, double f2x);
/// Delta-method standard error of f2x / lambda with independent estimates.
double ecs_std_error(double lambda, double se_lambda, double f2x, double se_f2x);

}  // namespace ebmss
