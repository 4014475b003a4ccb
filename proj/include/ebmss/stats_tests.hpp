#pragma once

// Unit-root, normality and serial-correlation diagnostics.

#include <Eigen/Dense>
#include <string_view>

namespace ebmss {

enum class AdfSpec { constant, constant_trend };
std::string_view to_string(AdfSpec spec);

struct AdfResult {
  double statistic = 0;  // t-ratio on pi
  int chosen_lag = 0;
  AdfSpec spec = AdfSpec::constant;
  int n_obs = 0;  // observations in the common estimation sample
  double crit_1 = 0;
  double crit_5 = 0;
  bool reject_1 = false;
  bool reject_5 = false;
};

/// MacKinnon (2010) response-surface critical value for `level` in {0.01, 0.05}.
double adf_critical_value(AdfSpec spec, double level, int n_obs);

/// Regression of dy_t on a constant (and trend), y_{t-1} and k lagged
/// differences. Every k in 0..max_lag is fit on the common sample that starts
/// after max_lag lags; k is chosen by BIC with ties going to the smaller k.
AdfResult adf_test(const Eigen::VectorXd& y, AdfSpec spec, int max_lag = 15);

/// Ordinary least squares with classical standard errors. Throws
/// numerical_error if X is rank deficient.
struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  double ssr = 0;
};
OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Population skewness and raw kurtosis (divisor n).
struct Moments {
  double mean = 0;
  double sd = 0;  // divisor n - 1
  double skewness = 0;
  double kurtosis = 0;
};
Moments sample_moments(const Eigen::VectorXd& x);

/// n/6 (S^2 + (K - 3)^2 / 4). Requires n >= 8 and non-zero variance.
double jarque_bera(const Eigen::VectorXd& x);

/// n (n + 2) sum_{j=1}^{k} rho_j^2 / (n - j). Requires n > k >= 1.
double ljung_box(const Eigen::VectorXd& x, int k);

struct ResidualSummary {
  double mean = 0;
  double sd = 0;
  double skewness = 0;
  double kurtosis = 0;
  double jb = 0;
  double q1 = 0;
  int n = 0;
};
ResidualSummary residual_summary(const Eigen::VectorXd& x);

}  // namespace ebmss
