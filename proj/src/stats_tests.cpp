#include "ebmss/stats_tests.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ebmss/errors.hpp"

namespace ebmss {

namespace {

// tau = b0 + b1/T + b2/T^2 + b3/T^3
struct Surface {
  double b[4];
};
constexpr Surface kConstant1{{-3.43035, -6.5393, -16.786, -79.433}};
constexpr Surface kConstant5{{-2.86154, -2.8903, -4.234, -40.040}};
constexpr Surface kTrend1{{-3.95877, -9.0531, -28.428, -134.155}};
constexpr Surface kTrend5{{-3.41049, -4.3904, -9.036, -45.374}};

double central_moment(const Eigen::VectorXd& x, double mean, int power) {
  return (x.array() - mean).pow(power).mean();
}

void require_variance(double m2, const char* what) {
  if (!(m2 > 0) || !std::isfinite(m2)) throw input_error(std::string(what) + ": sample has zero variance");
}

}  // namespace

std::string_view to_string(AdfSpec spec) { return spec == AdfSpec::constant ? "constant" : "constant_trend"; }

double adf_critical_value(AdfSpec spec, double level, int n_obs) {
  if (n_obs < 1) throw input_error("adf_critical_value: n_obs must be positive");
  const Surface* s = nullptr;
  if (level == 0.01) s = spec == AdfSpec::constant ? &kConstant1 : &kTrend1;
  if (level == 0.05) s = spec == AdfSpec::constant ? &kConstant5 : &kTrend5;
  if (!s) throw input_error("adf_critical_value: only the 1% and 5% levels are tabulated");
  const double inv = 1.0 / n_obs;
  return s->b[0] + inv * (s->b[1] + inv * (s->b[2] + inv * s->b[3]));
}

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size() || x.rows() <= x.cols()) throw input_error("ols: need more rows than regressors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw numerical_error("ols: regressor matrix is singular");
  OlsResult r;
  r.coef = qr.solve(y);
  const Eigen::VectorXd resid = y - x * r.coef;
  r.ssr = resid.squaredNorm();
  const double s2 = r.ssr / static_cast<double>(x.rows() - x.cols());
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  r.se = (s2 * xtx_inv.diagonal()).cwiseSqrt();
  return r;
}

AdfResult adf_test(const Eigen::VectorXd& y, AdfSpec spec, int max_lag) {
  const auto n = y.size();
  if (max_lag < 0) throw input_error("adf_test: max_lag must be non-negative");
  if (n <= max_lag + 5) throw input_error("adf_test: series too short for the requested max_lag");
  if (!y.allFinite()) throw input_error("adf_test: series contains missing values");

  const Eigen::VectorXd dy = y.tail(n - 1) - y.head(n - 1);  // dy(i) = y(i+1) - y(i)
  // Regression rows are t = max_lag + 1 .. n - 1 (index into y).
  const auto rows = static_cast<Eigen::Index>(n - 1 - max_lag);
  const int det = spec == AdfSpec::constant ? 1 : 2;

  auto design = [&](int k) {
    Eigen::MatrixXd x(rows, det + 1 + k);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index t = max_lag + 1 + r;
      x(r, 0) = 1.0;
      if (det == 2) x(r, 1) = static_cast<double>(t);
      x(r, det) = y(t - 1);
      for (int j = 1; j <= k; ++j) x(r, det + j) = dy(t - 1 - j);
    }
    return x;
  };
  const Eigen::VectorXd lhs = dy.tail(rows);

  int best_k = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  OlsResult best;
  for (int k = 0; k <= max_lag; ++k) {
    const auto x = design(k);
    auto fit = ols(x, lhs);
    const double bic = rows * std::log(fit.ssr / rows) + static_cast<double>(x.cols()) * std::log(static_cast<double>(rows));
    if (bic < best_bic) {
      best_bic = bic;
      best_k = k;
      best = std::move(fit);
    }
  }

  AdfResult r;
  r.spec = spec;
  r.chosen_lag = best_k;
  r.n_obs = static_cast<int>(rows);
  r.statistic = best.coef(det) / best.se(det);
  r.crit_1 = adf_critical_value(spec, 0.01, r.n_obs);
  r.crit_5 = adf_critical_value(spec, 0.05, r.n_obs);
  r.reject_1 = r.statistic < r.crit_1;
  r.reject_5 = r.statistic < r.crit_5;
  return r;
}

Moments sample_moments(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw input_error("sample_moments: need at least two values");
  Moments m;
  m.mean = x.mean();
  const double m2 = central_moment(x, m.mean, 2);
  require_variance(m2, "sample_moments");
  m.sd = std::sqrt(m2 * x.size() / static_cast<double>(x.size() - 1));
  m.skewness = central_moment(x, m.mean, 3) / std::pow(m2, 1.5);
  m.kurtosis = central_moment(x, m.mean, 4) / (m2 * m2);
  return m;
}

double jarque_bera(const Eigen::VectorXd& x) {
  if (x.size() < 8) throw input_error("jarque_bera: need at least 8 values");
  const auto m = sample_moments(x);
  const double ex = m.kurtosis - 3.0;
  return static_cast<double>(x.size()) / 6.0 * (m.skewness * m.skewness + ex * ex / 4.0);
}

double ljung_box(const Eigen::VectorXd& x, int k) {
  const auto n = x.size();
  if (k < 1 || n <= k) throw input_error("ljung_box: need n > k >= 1");
  const Eigen::VectorXd c = x.array() - x.mean();
  const double denom = c.squaredNorm();
  require_variance(denom / n, "ljung_box");
  double q = 0;
  for (int j = 1; j <= k; ++j) {
    const double rho = c.tail(n - j).dot(c.head(n - j)) / denom;
    q += rho * rho / static_cast<double>(n - j);
  }
  return static_cast<double>(n) * static_cast<double>(n + 2) * q;
}

ResidualSummary residual_summary(const Eigen::VectorXd& x) {
  if (x.size() < 8) throw input_error("residual_summary: need at least 8 values");
  const auto m = sample_moments(x);
  ResidualSummary s;
  s.mean = m.mean;
  s.sd = m.sd;
  s.skewness = m.skewness;
  s.kurtosis = m.kurtosis;
  s.jb = jarque_bera(x);
  s.q1 = ljung_box(x, 1);
  s.n = static_cast<int>(x.size());
  return s;
}

}  // namespace ebmss
