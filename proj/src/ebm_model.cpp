#include "ebmss/ebm_model.hpp"

#include <algorithm>
#include <cmath>

namespace ebmss {

bool PhysicalParams::valid() const {
  // gamma = 0 is admitted as the decoupled limit; transform() still rejects it.
  const bool positive = lambda > 0 && gamma >= 0 && c_m > 0 && c_d > 0;
  if (!positive || !(c_m < c_d)) return false;
  const double mix = (lambda + gamma) / c_m;
  const double deep = gamma / c_d;
  return mix > 0 && mix < 2 && deep >= 0 && deep < 2;
}

void PhysicalParams::validate() const {
  if (!(lambda > 0 && gamma >= 0 && c_m > 0 && c_d > 0))
    throw input_error("physical parameters must be positive");
  if (!(c_m < c_d)) throw input_error("physical parameters: c_m must be smaller than c_d");
  if (!valid()) throw input_error("physical parameters: temperature block is not discretely stable");
}

void MeasurementConfig::validate() const {
  if (n_gmst < 1) throw input_error("measurement config: at least one GMST series is required");
  if (n_ocean_pairs < 0) throw input_error("measurement config: negative ocean pair count");
  if (!(f2x > 0)) throw input_error("measurement config: f2x must be positive");
  if (!(f2x_se >= 0)) throw input_error("measurement config: f2x_se must be non-negative");
}

void EbmParamVector::validate(const MeasurementConfig& config) const {
  config.validate();
  physical.validate();
  const auto k = static_cast<std::size_t>(config.n_gmst);
  const auto j = static_cast<std::size_t>(config.n_ocean_pairs);
  if (noise.var_eps_gmst.size() != k || noise.var_eps_td.size() != j || noise.var_eps_ohc.size() != j ||
      noise.rho.size() != j || noise.mu_td.size() != j)
    throw input_error("parameter vector does not match the measurement configuration");
  const auto v = values();
  const auto transforms = parameter_transforms(config);
  const auto names = parameter_names(config);
  for (std::size_t i = 4; i < transforms.size(); ++i) {
    const double x = v(static_cast<Index>(i));
    if (!std::isfinite(x)) throw input_error("parameter " + names[i] + " is not finite");
    if (transforms[i] == ParamTransform::log && !(x >= kVarianceFloor))
      throw input_error("variance " + names[i] + " is below the floor");
    if (transforms[i] == ParamTransform::scaled_atanh && !(std::abs(x) < 1.0))
      throw input_error("correlation " + names[i] + " must lie in (-1, 1)");
  }
}

Eigen::VectorXd EbmParamVector::values() const {
  std::vector<double> v{physical.lambda,  physical.gamma,   physical.c_m,     physical.c_d,
                        noise.var_eta_tm, noise.var_eta_td, noise.var_eta_a, noise.var_eta_beta};
  v.insert(v.end(), noise.var_eps_gmst.begin(), noise.var_eps_gmst.end());
  v.insert(v.end(), noise.var_eps_td.begin(), noise.var_eps_td.end());
  v.insert(v.end(), noise.var_eps_ohc.begin(), noise.var_eps_ohc.end());
  v.push_back(noise.var_eps_f);
  v.insert(v.end(), noise.rho.begin(), noise.rho.end());
  v.insert(v.end(), noise.mu_td.begin(), noise.mu_td.end());
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

EbmParamVector EbmParamVector::from_values(const Eigen::VectorXd& v, const MeasurementConfig& config) {
  if (v.size() != config.n_params()) throw input_error("parameter vector has the wrong length");
  EbmParamVector out;
  Index i = 0;
  auto next = [&] { return v(i++); };
  auto take = [&](int count) {
    std::vector<double> r(static_cast<std::size_t>(count));
    for (auto& x : r) x = next();
    return r;
  };
  out.physical = {next(), next(), next(), next()};
  out.noise.var_eta_tm = next();
  out.noise.var_eta_td = next();
  out.noise.var_eta_a = next();
  out.noise.var_eta_beta = next();
  out.noise.var_eps_gmst = take(config.n_gmst);
  out.noise.var_eps_td = take(config.n_ocean_pairs);
  out.noise.var_eps_ohc = take(config.n_ocean_pairs);
  out.noise.var_eps_f = next();
  out.noise.rho = take(config.n_ocean_pairs);
  out.noise.mu_td = take(config.n_ocean_pairs);
  return out;
}

std::vector<std::string> parameter_names(const MeasurementConfig& config) {
  std::vector<std::string> n{"lambda",     "gamma",      "c_m",       "c_d",
                             "var_eta_tm", "var_eta_td", "var_eta_a", "var_eta_beta"};
  for (int k = 1; k <= config.n_gmst; ++k) n.push_back("var_eps_gmst_" + std::to_string(k));
  for (int j = 1; j <= config.n_ocean_pairs; ++j) n.push_back("var_eps_td_" + std::to_string(j));
  for (int j = 1; j <= config.n_ocean_pairs; ++j) n.push_back("var_eps_ohc_" + std::to_string(j));
  n.emplace_back("var_eps_f");
  for (int j = 1; j <= config.n_ocean_pairs; ++j) n.push_back("rho_" + std::to_string(j));
  for (int j = 1; j <= config.n_ocean_pairs; ++j) n.push_back("mu_td_" + std::to_string(j));
  return n;
}

std::vector<ParamTransform> parameter_transforms(const MeasurementConfig& config) {
  const auto positive = static_cast<std::size_t>(9 + config.n_gmst + 2 * config.n_ocean_pairs);
  std::vector<ParamTransform> t(positive, ParamTransform::log);
  t.insert(t.end(), static_cast<std::size_t>(config.n_ocean_pairs), ParamTransform::scaled_atanh);
  t.insert(t.end(), static_cast<std::size_t>(config.n_ocean_pairs), ParamTransform::identity);
  return t;
}

Unconstrained transform(const EbmParamVector& theta, const MeasurementConfig& config) {
  theta.validate(config);
  if (!(theta.physical.gamma > 0)) throw input_error("transform: gamma = 0 lies on the boundary");
  const auto v = theta.values();
  const auto kinds = parameter_transforms(config);
  const auto names = parameter_names(config);
  Unconstrained out;
  out.u.resize(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    switch (kinds[static_cast<std::size_t>(i)]) {
      case ParamTransform::log:
        out.u(i) = std::log(v(i));
        if (i >= 4 && v(i) <= kVarianceFloor) out.at_boundary.push_back(names[static_cast<std::size_t>(i)]);
        break;
      case ParamTransform::scaled_atanh:
        out.u(i) = std::atanh(v(i) / kRhoBound);
        break;
      case ParamTransform::identity:
        out.u(i) = v(i);
        break;
    }
  }
  return out;
}

EbmParamVector untransform(const Eigen::VectorXd& u, const MeasurementConfig& config) {
  if (u.size() != config.n_params()) throw input_error("unconstrained vector has the wrong length");
  const auto kinds = parameter_transforms(config);
  Eigen::VectorXd v(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    switch (kinds[static_cast<std::size_t>(i)]) {
      case ParamTransform::log:
        v(i) = std::exp(u(i));
        if (i >= 4) v(i) = std::max(v(i), kVarianceFloor);
        break;
      case ParamTransform::scaled_atanh:
        v(i) = kRhoBound * std::tanh(u(i));
        break;
      case ParamTransform::identity:
        v(i) = u(i);
        break;
    }
  }
  return EbmParamVector::from_values(v, config);
}

Eigen::VectorXd untransform_jacobian(const Eigen::VectorXd& u, const MeasurementConfig& config) {
  if (u.size() != config.n_params()) throw input_error("unconstrained vector has the wrong length");
  const auto kinds = parameter_transforms(config);
  Eigen::VectorXd d(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    switch (kinds[static_cast<std::size_t>(i)]) {
      case ParamTransform::log: {
        const double e = std::exp(u(i));
        d(i) = (i >= 4 && e < kVarianceFloor) ? 0.0 : e;
        break;
      }
      case ParamTransform::scaled_atanh: {
        const double th = std::tanh(u(i));
        d(i) = kRhoBound * (1.0 - th * th);
        break;
      }
      case ParamTransform::identity:
        d(i) = 1.0;
        break;
    }
  }
  return d;
}

SystemMatrices<double> build_system(const EbmParamVector& params, const MeasurementConfig& config,
                                    const Eigen::VectorXd& natural_forcing, Index steps, const StateInit& init) {
  params.validate(config);
  if (steps < 1) throw input_error("build_system: sample must contain at least one step");
  if (natural_forcing.size() < steps || !natural_forcing.head(steps).allFinite())
    throw input_error("build_system: natural forcing does not cover the sample");

  const auto& ph = params.physical;
  const auto& nz = params.noise;
  const Index m = state::dim;
  const Index k = config.n_gmst;
  const Index j = config.n_ocean_pairs;
  const Index p = config.obs_dim();

  SystemMatrices<double> sys;
  auto& tr = sys.transition;
  tr = Eigen::MatrixXd::Zero(m, m);
  tr(state::tm, state::tm) = 1.0 - (ph.lambda + ph.gamma) / ph.c_m;
  tr(state::tm, state::td) = ph.gamma / ph.c_m;
  tr(state::tm, state::natural) = 1.0 / ph.c_m;
  tr(state::tm, state::anthro) = 1.0 / ph.c_m;
  tr(state::td, state::tm) = ph.gamma / ph.c_d;
  tr(state::td, state::td) = 1.0 - ph.gamma / ph.c_d;
  tr(state::anthro, state::anthro) = 1.0;
  tr(state::anthro, state::slope) = 1.0;
  tr(state::slope, state::slope) = 1.0;
  tr(state::one, state::one) = 1.0;

  VaryingEntry<double> nat;
  nat.row = state::natural;
  nat.col = state::one;
  nat.values = steps > 1 ? Eigen::VectorXd(natural_forcing.segment(1, steps - 1)) : Eigen::VectorXd();
  tr(state::natural, state::one) = natural_forcing(0);
  sys.varying = std::move(nat);

  sys.state_cov = Eigen::MatrixXd::Zero(m, m);
  sys.state_cov(state::tm, state::tm) = nz.var_eta_tm;
  sys.state_cov(state::td, state::td) = nz.var_eta_td;
  sys.state_cov(state::anthro, state::anthro) = nz.var_eta_a;
  sys.state_cov(state::slope, state::slope) = nz.var_eta_beta;

  auto& z = sys.measurement;
  z = Eigen::MatrixXd::Zero(p, m);
  auto& h = sys.obs_cov;
  h = Eigen::MatrixXd::Zero(p, p);
  for (Index r = 0; r < k; ++r) {
    z(r, state::tm) = 1.0;
    h(r, r) = nz.var_eps_gmst[static_cast<std::size_t>(r)];
  }
  for (Index q = 0; q < j; ++q) {
    const auto s = static_cast<std::size_t>(q);
    const Index temp_row = k + q;
    const Index ohc_row = k + j + q;
    z(temp_row, state::td) = 1.0;
    z(temp_row, state::one) = nz.mu_td[s];
    z(ohc_row, state::td) = ph.c_d;
    z(ohc_row, state::one) = ph.c_d * nz.mu_td[s];
    h(temp_row, temp_row) = nz.var_eps_td[s];
    h(ohc_row, ohc_row) = nz.var_eps_ohc[s];
    const double cov = nz.rho[s] * std::sqrt(nz.var_eps_td[s] * nz.var_eps_ohc[s]);
    h(temp_row, ohc_row) = cov;
    h(ohc_row, temp_row) = cov;
  }
  z(p - 1, state::natural) = 1.0;
  z(p - 1, state::anthro) = 1.0;
  h(p - 1, p - 1) = nz.var_eps_f;

  sys.init_mean = Eigen::VectorXd::Zero(m);
  sys.init_cov = Eigen::MatrixXd::Zero(m, m);
  sys.init_mean(state::natural) = natural_forcing(0);
  sys.init_mean(state::one) = 1.0;
  if (init.kind == InitKind::big_k) {
    for (Index s : {state::tm, state::td, state::anthro, state::slope}) sys.init_cov(s, s) = init.big_k;
  } else {
    sys.init_mean(state::tm) = init.known_mean(0);
    sys.init_mean(state::td) = init.known_mean(1);
    sys.init_mean(state::anthro) = init.known_mean(2);
    sys.init_mean(state::slope) = init.known_mean(3);
  }
  return sys;
}

double ecs(double lambda, double f2x) {
  if (!(lambda > 0)) throw input_error("ecs: lambda must be positive");
  return f2x / lambda;
}

double ecs_std_error(double lambda, double se_lambda, double f2x, double se_f2x) {
  if (!(lambda > 0)) throw input_error("ecs_std_error: lambda must be positive");
  if (!(se_lambda >= 0 && se_f2x >= 0)) throw input_error("ecs_std_error: standard errors must be non-negative");
  const double d_f2x = 1.0 / lambda;
  const double d_lambda = f2x / (lambda * lambda);
  return std::sqrt(d_f2x * d_f2x * se_f2x * se_f2x + d_lambda * d_lambda * se_lambda * se_lambda);
}

}  // namespace ebmss
