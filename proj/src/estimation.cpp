#include "ebmss/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ebmss/linalg.hpp"
#include "ebmss/ssm.hpp"

namespace ebmss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Used when a series is too short or absent to give a moment.
constexpr double kFallbackVariance = 1e-4;
constexpr double kInitVarianceMin = 1e-8;

// Sample variance of the order-th difference over runs of observed cells.
double diff_variance(const ObservationPanel& panel, Index row, const Eigen::VectorXd* subtract, int order) {
  std::vector<double> x;
  std::vector<bool> ok;
  for (Index t = 0; t < panel.n_steps(); ++t) {
    double v = panel.values(row, t);
    bool o = panel.is_observed(row, t);
    if (subtract) {
      v -= (*subtract)(t);
      o = o && std::isfinite((*subtract)(t));
    }
    x.push_back(v);
    ok.push_back(o);
  }
  for (int d = 0; d < order; ++d) {
    for (std::size_t t = x.size() - 1; t > 0; --t) {
      x[t] -= x[t - 1];
      ok[t] = ok[t] && ok[t - 1];
    }
    ok[0] = false;
  }
  double sum = 0, sq = 0;
  int n = 0;
  for (std::size_t t = 0; t < x.size(); ++t)
    if (ok[t]) {
      sum += x[t];
      ++n;
    }
  if (n < 3) return std::nan("");
  const double mean = sum / n;
  for (std::size_t t = 0; t < x.size(); ++t)
    if (ok[t]) sq += (x[t] - mean) * (x[t] - mean);
  return sq / (n - 1);
}

double init_variance(double scale, double moment) {
  if (!std::isfinite(moment) || moment <= 0) return kFallbackVariance;
  return std::max(scale * moment, kInitVarianceMin);
}

}  // namespace

void check_layout(const ObservationPanel& panel, const MeasurementConfig& config) {
  config.validate();
  panel.validate();
  const Index k = config.n_gmst;
  const Index j = config.n_ocean_pairs;
  if (panel.n_series() != config.obs_dim())
    throw input_error("panel has " + std::to_string(panel.n_series()) + " rows, configuration expects " +
                      std::to_string(config.obs_dim()));
  auto expect = [&](Index row, SeriesKind kind) {
    const auto& s = panel.series[static_cast<std::size_t>(row)];
    if (s.kind != kind)
      throw input_error("panel row " + std::to_string(row) + " ('" + s.label + "') should be " +
                        std::string(to_string(kind)));
  };
  for (Index r = 0; r < k; ++r) expect(r, SeriesKind::gmst);
  for (Index q = 0; q < j; ++q) {
    expect(k + q, SeriesKind::ocean_temp);
    expect(k + j + q, SeriesKind::ohc);
    if (panel.series[static_cast<std::size_t>(k + q)].pair_id != panel.series[static_cast<std::size_t>(k + j + q)].pair_id)
      throw input_error("panel: OHC rows are not in the same pair order as the ocean-temperature rows");
  }
  expect(k + 2 * j, SeriesKind::forcing_total);
}

MeasurementConfig config_for(const ObservationPanel& panel) {
  MeasurementConfig c;
  c.n_gmst = static_cast<int>(panel.rows_of_kind(SeriesKind::gmst).size());
  c.n_ocean_pairs = static_cast<int>(panel.rows_of_kind(SeriesKind::ocean_temp).size());
  return c;
}

double ebm_loglik(const EbmParamVector& params, const MeasurementConfig& config, const Dataset& data,
                  const StateInit& init) {
  const auto sys = build_system(params, config, data.natural, data.panel.n_steps(), init);
  return log_likelihood(sys, data.panel);
}

EbmParamVector default_init(const Dataset& data, const MeasurementConfig& config) {
  check_layout(data.panel, config);
  const auto& panel = data.panel;
  const Index k = config.n_gmst;
  const Index j = config.n_ocean_pairs;
  const Index f_row = k + 2 * j;

  EbmParamVector p;
  p.physical = {1.0, 1.0, 10.0, 100.0};
  auto& nz = p.noise;

  const double g1 = diff_variance(panel, 0, nullptr, 1);
  nz.var_eta_tm = init_variance(0.5, g1);
  for (Index r = 0; r < k; ++r) nz.var_eps_gmst.push_back(init_variance(0.25, diff_variance(panel, r, nullptr, 1)));

  nz.var_eta_td = j > 0 ? init_variance(0.5, diff_variance(panel, k, nullptr, 1)) : kFallbackVariance;
  for (Index q = 0; q < j; ++q) {
    nz.var_eps_td.push_back(init_variance(0.25, diff_variance(panel, k + q, nullptr, 1)));
    nz.var_eps_ohc.push_back(init_variance(0.25, diff_variance(panel, k + j + q, nullptr, 1)));
    nz.rho.push_back(0.5);
    double sum = 0;
    int n = 0;
    for (Index t = 0; t < panel.n_steps(); ++t)
      if (panel.is_observed(k + q, t) && panel.is_observed(0, t)) {
        sum += panel.values(k + q, t) - panel.values(0, t);
        ++n;
      }
    nz.mu_td.push_back(n > 0 ? sum / n : 0.0);
  }

  // The anthropogenic part is I(2), so its moment comes from the second difference.
  const double a2 = diff_variance(panel, f_row, &data.natural, 2);
  nz.var_eta_a = init_variance(0.5, a2);
  nz.var_eta_beta = init_variance(0.5, a2);
  nz.var_eps_f = init_variance(0.25, a2);
  return p;
}

StandardErrors standard_errors(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& jacobian) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != jacobian.size())
    throw input_error("standard_errors: dimension mismatch");
  StandardErrors out;
  Eigen::MatrixXd neg = -hessian;
  symmetrize(neg);
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() == Eigen::Success) {
    out.vcov_unconstrained = llt.solve(Eigen::MatrixXd::Identity(neg.rows(), neg.cols()));
  } else {
    out.vcov_unconstrained = pinv_symmetric<double>(neg);
    out.pseudo_inverse = true;
  }
  symmetrize(out.vcov_unconstrained);
  out.vcov = jacobian.asDiagonal() * out.vcov_unconstrained * jacobian.asDiagonal();
  out.se.resize(jacobian.size());
  for (Index i = 0; i < jacobian.size(); ++i) {
    const double v = out.vcov(i, i);
    if (v < 0) {
      out.nonidentified.push_back(i);
      out.se(i) = std::nan("");
    } else {
      out.se(i) = std::sqrt(v);
    }
  }
  return out;
}

double coefficient_of_variation(double se, double estimate) {
  if (estimate == 0) return std::nan("");
  return se / std::abs(estimate);
}

std::vector<CvRow> coefficient_of_variation(const FitResult& fit) {
  const auto names = parameter_names(fit.config);
  const auto v = fit.theta_hat.values();
  std::vector<CvRow> rows;
  for (Index i = 0; i < 4; ++i) {
    const double se = fit.se.size() > i ? fit.se(i) : std::nan("");
    rows.push_back({names[static_cast<std::size_t>(i)], v(i), se, coefficient_of_variation(se, v(i))});
  }
  rows.push_back({"ecs", fit.ecs_hat, fit.ecs_se, coefficient_of_variation(fit.ecs_se, fit.ecs_hat)});
  return rows;
}

FitResult fit_mle(const Dataset& data, const MeasurementConfig& config, const EbmParamVector& init,
                  const FitOptions& options) {
  check_layout(data.panel, config);
  const auto start = transform(init, config);
  if (data.natural.size() < data.panel.n_steps() || !data.natural.head(data.panel.n_steps()).allFinite())
    throw input_error("fit: natural forcing does not cover the sample");

  const Objective objective = [&](const Eigen::VectorXd& u) {
    const auto theta = untransform(u, config);
    if (!theta.physical.valid()) return kNegInf;
    try {
      return ebm_loglik(theta, config, data, options.state_init);
    } catch (const numerical_error&) {
      return kNegInf;
    } catch (const input_error&) {
      return kNegInf;
    }
  };

  FitResult fit;
  fit.config = config;
  fit.init_loglik = objective(start.u);
  if (!std::isfinite(fit.init_loglik)) throw numerical_error("fit: log-likelihood is not finite at the initial values");

  const auto nm = nelder_mead_maximize(objective, start.u, options.optimizer);
  fit.u_hat = nm.x;
  fit.theta_hat = untransform(nm.x, config);
  fit.loglik = nm.value;
  fit.convergence = {nm.converged, nm.evaluations, nm.iterations, nm.starts,
                     nm.converged ? "converged" : "evaluation limit reached"};

  const auto names = parameter_names(config);
  const auto values = fit.theta_hat.values();
  const auto kinds = parameter_transforms(config);
  for (std::size_t i = 4; i < kinds.size(); ++i)
    if (kinds[i] == ParamTransform::log && values(static_cast<Index>(i)) <= kVarianceFloor * (1 + 1e-9))
      fit.at_boundary.push_back(names[i]);

  const auto& ph = fit.theta_hat.physical;
  fit.ecs_hat = ecs(ph.lambda, config.f2x);
  fit.se = Eigen::VectorXd::Constant(values.size(), std::nan(""));
  fit.vcov = Eigen::MatrixXd::Constant(values.size(), values.size(), std::nan(""));
  if (!options.compute_se) return fit;

  HessianResult hess;
  try {
    hess = numerical_hessian(objective, nm.x, options.hessian_step);
  } catch (const numerical_error& e) {
    fit.convergence.status += "; hessian failed: ";
    fit.convergence.status += e.what();
    return fit;
  }
  fit.hessian_step_shrunk = hess.step_shrunk;
  const auto se = standard_errors(hess.hessian, untransform_jacobian(nm.x, config));
  fit.se = se.se;
  fit.vcov = se.vcov;
  fit.pseudo_inverse = se.pseudo_inverse;
  for (auto i : se.nonidentified) fit.nonidentified.push_back(names[static_cast<std::size_t>(i)]);

  Eigen::Matrix4d vp = se.vcov.topLeftCorner(4, 4);
  symmetrize(vp);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(vp);
  if (eig.eigenvalues().minCoeff() < 0) {
    fit.vcov_clipped = true;
    vp = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
  }
  fit.vcov_physical = vp;
  for (Index i = 0; i < 4; ++i) fit.cv(i) = coefficient_of_variation(fit.se(i), values(i));
  if (std::isfinite(fit.se(0))) fit.ecs_se = ecs_std_error(ph.lambda, fit.se(0), config.f2x, config.f2x_se);
  return fit;
}

}  // namespace ebmss
