#pragma once

// Derivative-free maximization and finite-difference curvature.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace ebmss {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  int max_evals = 20000;        // per start
  double ftol = 1e-8;           // stop when a cycle of n + 1 iterations improves the best value by less
  double spread_tol = 1e-4;     // ... and the simplex values lie within this range
  double initial_step = 0.25;   // simplex edge along each coordinate
  int restarts = 5;             // extra starts after the first
  double restart_jitter = 0.1;  // sd of the Gaussian jitter applied to restart points
  std::uint64_t seed = 1;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0;  // objective at x
  int evaluations = 0;
  int iterations = 0;
  int starts = 0;
  bool converged = false;  // the last start met ftol before max_evals
};

/// Maximizes `f` with the adaptive-coefficient Nelder-Mead simplex. Non-finite
/// objective values are treated as -inf. Each restart rebuilds the simplex
/// around a jittered copy of the best point so far; the best point is returned.
NelderMeadResult nelder_mead_maximize(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {});

struct HessianResult {
  Eigen::MatrixXd hessian;
  double rel_step = 0;    // step actually used
  bool step_shrunk = false;
};

/// Central-difference Hessian, step h_i = rel_step (1 + |x_i|). If any stencil
/// point is non-finite the step is halved once; a second failure throws
/// numerical_error. The result is symmetrized.
HessianResult numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

}  // namespace ebmss
