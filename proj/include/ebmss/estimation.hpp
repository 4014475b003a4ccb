#pragma once

// Maximum-likelihood fitting of the EBM state-space model.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ebmss/ebm_model.hpp"
#include "ebmss/optimize.hpp"
#include "ebmss/panel.hpp"

namespace ebmss {

/// Checks that the panel rows follow the canonical layout for `config`:
/// GMSTs, ocean temperatures, OHCs (same pair order), total forcing.
void check_layout(const ObservationPanel& panel, const MeasurementConfig& config);
/// K and J counted from the panel's series kinds; f2x defaults.
MeasurementConfig config_for(const ObservationPanel& panel);

/// Kalman-filter log-likelihood of `params` on `data`.
double ebm_loglik(const EbmParamVector& params, const MeasurementConfig& config, const Dataset& data,
                  const StateInit& init = {});

/// Starting values from sample moments of the data (see README).
EbmParamVector default_init(const Dataset& data, const MeasurementConfig& config);

struct FitOptions {
  NelderMeadOptions optimizer{};
  double hessian_step = 1e-4;
  bool compute_se = true;
  StateInit state_init{};
};

struct StandardErrors {
  Eigen::VectorXd se;                 // original scale; NaN where the variance is negative
  Eigen::MatrixXd vcov;               // original scale, J V J^T
  Eigen::MatrixXd vcov_unconstrained;
  bool pseudo_inverse = false;        // -H was not positive definite
  std::vector<Eigen::Index> nonidentified;  // negative diagonal after propagation
};

/// vcov_u = (-H)^{-1} (pseudo-inverse if -H is not positive definite),
/// vcov = J vcov_u J^T with J = diag(jacobian).
StandardErrors standard_errors(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& jacobian);

/// se / |estimate|; NaN when the estimate is zero.
double coefficient_of_variation(double se, double estimate);

struct Convergence {
  bool converged = false;
  int evaluations = 0;
  int iterations = 0;
  int starts = 0;
  std::string status;
};

struct FitResult {
  MeasurementConfig config;
  EbmParamVector theta_hat;
  Eigen::VectorXd u_hat;
  double loglik = 0;
  double init_loglik = 0;
  Eigen::VectorXd se;  // per parameter, canonical order
  Eigen::MatrixXd vcov;
  Eigen::Matrix4d vcov_physical = Eigen::Matrix4d::Zero();  // (lambda, gamma, c_m, c_d), PSD
  bool vcov_clipped = false;
  bool pseudo_inverse = false;
  bool hessian_step_shrunk = false;
  std::vector<std::string> nonidentified;
  std::vector<std::string> at_boundary;
  Eigen::Vector4d cv = Eigen::Vector4d::Constant(std::nan(""));
  double ecs_hat = 0;
  double ecs_se = std::nan("");
  Convergence convergence;
};

struct CvRow {
  std::string name;
  double estimate;
  double se;
  double cv;
};
/// Physical parameters followed by ECS.
std::vector<CvRow> coefficient_of_variation(const FitResult& fit);

/// Nelder-Mead over the unconstrained image of theta with restarts. Points at
/// which the filter fails or the physical invariants are violated score -inf.
FitResult fit_mle(const Dataset& data, const MeasurementConfig& config, const EbmParamVector& init,
                  const FitOptions& options = {});

}  // namespace ebmss
